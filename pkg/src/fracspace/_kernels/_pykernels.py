"""Pure NumPy versions of the compiled kernels.

The summation order is the same as in ``_ckernels.pyx``: sequential sums
over leaves of ``BLOCK`` elements, then a pairwise tree over the leaf sums
(odd element carried to the next level). Given identical summands the two
backends produce identical bits.
"""
import numpy as np
from scipy import special

BLOCK = 64


def _rows_pairwise(x):
    """Fixed-order pairwise sum along the last axis of a 2-D array."""
    rows, n = x.shape
    if n == 0:
        return np.zeros(rows)
    m = -(-n // BLOCK)
    padded = np.zeros((rows, m * BLOCK))
    padded[:, :n] = x
    blocks = padded.reshape(rows, m, BLOCK)
    acc = np.zeros((rows, m))
    for j in range(BLOCK):
        acc += blocks[:, :, j]
    while acc.shape[1] > 1:
        width = acc.shape[1]
        paired = acc[:, : width - 1 : 2] + acc[:, 1::2]
        if width % 2:
            paired = np.concatenate([paired, acc[:, -1:]], axis=1)
        acc = paired
    return acc[:, 0]


def pairwise_sum(x):
    x = np.ascontiguousarray(x, dtype=np.float64).reshape(1, -1)
    return float(_rows_pairwise(x)[0])


def power_sum(x, p):
    """Sum of ``|x|**p`` over a real array."""
    x = np.abs(np.ascontiguousarray(x, dtype=np.float64).ravel())
    if p == 1.0:
        y = x
    elif p == 2.0:
        y = x * x
    else:
        y = np.power(x, p)
    return pairwise_sum(y)


def _one_minus(z, dim):
    if dim == 1:
        s = np.sin(0.5 * z)
        return 2.0 * s * s
    small = np.abs(z) < 0.1
    out = np.empty_like(z)
    zs = z[small]
    z2 = zs * zs
    zz = z[~small]
    if dim == 2:
        out[small] = z2 * (0.25 - z2 * (1.0 / 64 - z2 * (1.0 / 2304 - z2 / 147456.0)))
        out[~small] = 1.0 - special.j0(zz)
    else:
        out[small] = z2 * (1.0 / 6 - z2 * (1.0 / 120 - z2 * (1.0 / 5040 - z2 / 362880.0)))
        out[~small] = 1.0 - np.sin(zz) / zz
    return out


def radial_transform(k, r, w, dim):
    """Evaluate ``sum_j w_j a(k r_j)`` and ``sum_j w_j (1 - a(k r_j))``.

    ``a`` is the angular average of ``exp(-i xi.z)`` over the unit sphere in
    ``dim`` dimensions (cos, J0 and sin(z)/z for dim 1, 2, 3).
    """
    k = np.ascontiguousarray(k, dtype=np.float64).ravel()
    r = np.ascontiguousarray(r, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    z = np.multiply.outer(k, r)
    om = _one_minus(z.ravel(), dim).reshape(z.shape)
    return _rows_pairwise((1.0 - om) * w), _rows_pairwise(om * w)
