# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; ``_pykernels`` documents the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sin
from scipy.special.cython_special cimport j0

cnp.import_array()

cdef enum:
    BLOCK = 64


cdef double _pairwise(const double* x, Py_ssize_t n, double* leaves) noexcept nogil:
    # leaves needs room for ceil(n / BLOCK) doubles
    cdef Py_ssize_t m = (n + BLOCK - 1) // BLOCK
    cdef Py_ssize_t b, i, end, half
    cdef double acc
    if n == 0:
        return 0.0
    for b in range(m):
        acc = 0.0
        end = (b + 1) * BLOCK
        if end > n:
            end = n
        for i in range(b * BLOCK, end):
            acc = acc + x[i]
        leaves[b] = acc
    while m > 1:
        half = m // 2
        for i in range(half):
            leaves[i] = leaves[2 * i] + leaves[2 * i + 1]
        if m % 2:
            leaves[half] = leaves[m - 1]
            m = half + 1
        else:
            m = half
    return leaves[0]


def pairwise_sum(x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0]
    if n == 0:
        return 0.0
    cdef double[::1] leaves = np.empty((n + BLOCK - 1) // BLOCK)
    cdef double out
    with nogil:
        out = _pairwise(&xv[0], n, &leaves[0])
    return out


def power_sum(x, double p):
    cdef const double[::1] xv
    if p != 1.0 and p != 2.0:
        # np.power and libm pow round differently; share numpy's powers with the fallback
        return pairwise_sum(np.power(np.abs(np.ascontiguousarray(x, dtype=np.float64).ravel()), p))
    xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0]
    if n == 0:
        return 0.0
    cdef double[::1] leaves = np.empty((n + BLOCK - 1) // BLOCK)
    cdef Py_ssize_t m = (n + BLOCK - 1) // BLOCK
    cdef Py_ssize_t b, i, end, half
    cdef double acc, a
    cdef bint square = p == 2.0
    with nogil:
        for b in range(m):
            acc = 0.0
            end = (b + 1) * BLOCK
            if end > n:
                end = n
            for i in range(b * BLOCK, end):
                a = fabs(xv[i])
                if square:
                    acc = acc + a * a
                else:
                    acc = acc + a
            leaves[b] = acc
        while m > 1:
            half = m // 2
            for i in range(half):
                leaves[i] = leaves[2 * i] + leaves[2 * i + 1]
            if m % 2:
                leaves[half] = leaves[m - 1]
                m = half + 1
            else:
                m = half
    return leaves[0]


cdef inline double _one_minus(double z, int dim) noexcept nogil:
    cdef double s, z2
    if dim == 1:
        s = sin(0.5 * z)
        return 2.0 * s * s
    z2 = z * z
    if fabs(z) < 0.1:
        if dim == 2:
            return z2 * (0.25 - z2 * (1.0 / 64 - z2 * (1.0 / 2304 - z2 / 147456.0)))
        return z2 * (1.0 / 6 - z2 * (1.0 / 120 - z2 * (1.0 / 5040 - z2 / 362880.0)))
    if dim == 2:
        return 1.0 - j0(z)
    return 1.0 - sin(z) / z


def radial_transform(k, r, w, int dim):
    cdef const double[::1] kv = np.ascontiguousarray(k, dtype=np.float64).ravel()
    cdef const double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t nk = kv.shape[0], nr = rv.shape[0]
    value_arr = np.empty(nk)
    om_arr = np.empty(nk)
    cdef double[::1] value = value_arr
    cdef double[::1] one_minus = om_arr
    cdef double[::1] tv = np.empty(max(nr, 1))
    cdef double[::1] tom = np.empty(max(nr, 1))
    cdef double[::1] leaves = np.empty(max((nr + BLOCK - 1) // BLOCK, 1))
    cdef Py_ssize_t a, j
    cdef double om
    with nogil:
        for a in range(nk):
            for j in range(nr):
                om = _one_minus(kv[a] * rv[j], dim)
                tom[j] = om * wv[j]
                tv[j] = (1.0 - om) * wv[j]
            value[a] = _pairwise(&tv[0], nr, &leaves[0])
            one_minus[a] = _pairwise(&tom[0], nr, &leaves[0])
    return value_arr, om_arr
