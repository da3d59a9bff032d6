"""Periodic grids, sampled functions and the spectral transform.

A box ``[0, L_1) x ... x [0, L_N)`` with ``n_i`` points per axis stands in
for R^N. Samples sit at ``x_j = j * L / n``. Spectral coefficients use the
normalization

    f_hat(xi) = (1 / prod n_i) * sum_x f(x) exp(-i xi . x),

so the zero-frequency coefficient is the mean of ``f``. Coefficients are
stored in the native FFT ordering: index 0 is ``xi = 0``, followed by the
positive frequencies and then the negative ones (``scipy.fft.fftfreq``).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from ._config import get_threads
from ._kernels import pairwise_sum, power_sum
from .errors import DomainError, MalformedInputError

REAL_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Shape and physical size of a periodic box."""

    dims: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in np.atleast_1d(self.dims))
        lengths = tuple(float(L) for L in np.atleast_1d(self.lengths))
        if len(lengths) == 1 and len(dims) > 1:
            lengths = lengths * len(dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "lengths", lengths)
        if not 1 <= len(dims) <= 3:
            raise MalformedInputError("grid dimension must be 1, 2 or 3", dims=list(dims))
        if len(lengths) != len(dims):
            raise MalformedInputError("one box length per axis required")
        if any(n < 8 for n in dims):
            raise MalformedInputError("at least 8 points per axis required", dims=list(dims))
        if any(not (L > 0 and math.isfinite(L)) for L in lengths):
            raise MalformedInputError("box lengths must be positive and finite")

    @classmethod
    def uniform(cls, n, length, dim=1):
        return cls((n,) * dim, (length,) * dim)

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def size(self):
        return math.prod(self.dims)

    @property
    def volume(self):
        return math.prod(self.lengths)

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.lengths, self.dims))

    @property
    def cell_volume(self):
        return self.volume / self.size

    @property
    def center(self):
        return tuple(L / 2 for L in self.lengths)

    def axes(self):
        """1-D coordinate arrays, one per axis."""
        return [np.arange(n) * (L / n) for n, L in zip(self.dims, self.lengths)]

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def offsets(self, center=None):
        """Minimum-image displacement ``x - center`` along each axis."""
        center = self.center if center is None else tuple(center)
        if len(center) != self.ndim:
            raise MalformedInputError("center must have one coordinate per axis")
        out = []
        for x, c, L in zip(self.mesh(), center, self.lengths):
            out.append(np.mod(x - c + L / 2, L) - L / 2)
        return out

    def to_dict(self):
        return {"N": self.ndim, "dims": list(self.dims), "L": list(self.lengths)}


class FrequencyGrid:
    """Angular frequencies of a grid in native FFT ordering."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.axes = [
            2 * np.pi * scipy.fft.fftfreq(n, d=L / n) for n, L in zip(grid.dims, grid.lengths)
        ]
        mesh = np.meshgrid(*self.axes, indexing="ij")
        self.xi = tuple(mesh)
        xi2 = np.zeros(grid.dims)
        for component in mesh:
            xi2 = xi2 + component * component
        self.xi2 = xi2
        for a in self.xi:
            a.setflags(write=False)
        self.xi2.setflags(write=False)

    @property
    def xi_max(self):
        return float(np.sqrt(self.xi2.max()))

    def nyquist_mask(self):
        """True where any axis sits on its unpaired Nyquist frequency."""
        mask = np.zeros(self.grid.dims, dtype=bool)
        for axis, n in enumerate(self.grid.dims):
            if n % 2 == 0:
                idx = [slice(None)] * self.grid.ndim
                idx[axis] = n // 2
                mask[tuple(idx)] = True
        return mask


@functools.lru_cache(maxsize=64)
def frequency_grid(grid: GridSpec) -> FrequencyGrid:
    return FrequencyGrid(grid)


class GridFunction:
    """Immutable samples of a function on a periodic grid.

    ``values`` has shape ``grid.dims`` (row-major, so ``values.ravel()`` is
    the flat layout). ``kind`` is ``"real"`` or ``"complex"``.
    """

    __slots__ = ("grid", "values", "kind")

    def __init__(self, grid: GridSpec, values, kind=None):
        arr = np.asarray(values)
        if arr.size != grid.size:
            raise MalformedInputError(
                "sample count does not match grid", expected=grid.size, got=int(arr.size)
            )
        arr = arr.reshape(grid.dims)
        if kind is None:
            kind = "complex" if np.iscomplexobj(arr) else "real"
        if kind not in ("real", "complex"):
            raise MalformedInputError(f"unknown kind {kind!r}")
        if kind == "real":
            if np.iscomplexobj(arr):
                scale = float(np.max(np.abs(arr))) if arr.size else 0.0
                if float(np.max(np.abs(arr.imag))) > REAL_TOL * scale:
                    raise MalformedInputError("imaginary part too large for a real function")
                arr = arr.real
            arr = np.array(arr, dtype=np.float64)
        else:
            arr = np.array(arr, dtype=np.complex128)
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr
        self.kind = kind

    def __repr__(self):
        return f"GridFunction(dims={self.grid.dims}, kind={self.kind!r})"

    @property
    def flat(self):
        return self.values.ravel()

    def _like(self, values):
        kind = "complex" if np.iscomplexobj(values) else "real"
        return GridFunction(self.grid, values, kind)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise MalformedInputError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return self._like(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._like(self.values - self._other(other))

    def __rsub__(self, other):
        return self._like(self._other(other) - self.values)

    def __mul__(self, other):
        return self._like(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._like(self.values / self._other(other))

    def __neg__(self):
        return self._like(-self.values)

    def abs(self):
        return np.abs(self.values)

    def max_modulus(self):
        return float(np.max(np.abs(self.values)))


def _as_function(f):
    if not isinstance(f, GridFunction):
        raise MalformedInputError("expected a GridFunction")
    return f


def fft(values):
    return scipy.fft.fftn(values, workers=get_threads()) / values.size


def ifft(coeffs):
    return scipy.fft.ifftn(coeffs * coeffs.size, workers=get_threads())


def forward_transform(f: GridFunction) -> GridFunction:
    """Spectral coefficients of ``f`` (complex, native FFT ordering)."""
    f = _as_function(f)
    return GridFunction(f.grid, fft(f.values), "complex")


def inverse_transform(coeffs: GridFunction, kind=None) -> GridFunction:
    """Samples from spectral coefficients.

    With ``kind=None`` the result is real when the imaginary part is below
    the real-kind tolerance.
    """
    coeffs = _as_function(coeffs)
    values = ifft(coeffs.values)
    if kind is None:
        scale = float(np.max(np.abs(values))) if values.size else 0.0
        kind = "real" if float(np.max(np.abs(values.imag))) <= REAL_TOL * scale else "complex"
    if kind == "real":
        values = values.real
    return GridFunction(coeffs.grid, values, kind)


def apply_multiplier(f: GridFunction, multiplier) -> GridFunction:
    """Multiply the spectrum of ``f`` by ``multiplier`` and transform back.

    Real inputs stay real when the multiplier is real; every multiplier used
    in this package is a function of ``|xi|`` and hence even.
    """
    values = ifft(fft(f.values) * multiplier)
    if f.kind == "real" and not np.iscomplexobj(multiplier):
        return GridFunction(f.grid, values.real, "real")
    return GridFunction(f.grid, values, "complex")


def gradient(f: GridFunction) -> list[GridFunction]:
    """Spectral partial derivatives; the unpaired Nyquist mode is dropped."""
    freq = frequency_grid(f.grid)
    coeffs = fft(f.values)
    coeffs = np.where(freq.nyquist_mask(), 0.0, coeffs)
    out = []
    for xi in freq.xi:
        d = ifft(1j * xi * coeffs)
        out.append(GridFunction(f.grid, d.real if f.kind == "real" else d, f.kind))
    return out


def integrate(f: GridFunction):
    """Trapezoidal (periodic) quadrature of ``f`` over the box."""
    vals = f.values
    if np.iscomplexobj(vals):
        return complex(pairwise_sum(vals.real), pairwise_sum(vals.imag)) * f.grid.cell_volume
    return pairwise_sum(vals) * f.grid.cell_volume


def weighted_power_sum(values, p):
    """``sum |values|**p`` with fixed-order pairwise summation."""
    return power_sum(np.abs(values), p)


# ----------------------------------------------------------------------------
# test-function catalog

CATALOG = ("gaussian_bump", "compact_bump", "sine_mode", "constant", "plateau")


def _center_from(params, grid, start):
    rest = list(params[start:])
    if not rest:
        return grid.center
    if len(rest) != grid.ndim:
        raise DomainError("center needs one coordinate per axis", params=list(params))
    return tuple(float(c) for c in rest)


def _gaussian(grid, sigma, center):
    if sigma <= 0:
        raise DomainError("gaussian width must be positive")
    vals = np.ones(grid.dims)
    for x, c, L in zip(grid.mesh(), center, grid.lengths):
        images = int(math.ceil(8 * sigma / L)) + 1
        axis_sum = np.zeros(grid.dims)
        for m in range(-images, images + 1):
            d = x - c - m * L
            axis_sum += np.exp(-d * d / (2 * sigma * sigma))
        vals = vals * axis_sum
    return vals


def bump_profile(r2):
    """Unnormalized standard bump ``exp(-1/(1-r^2))`` on ``r^2 < 1``."""
    r2 = np.asarray(r2, dtype=np.float64)
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def catalog_function(name: str, params, grid: GridSpec) -> GridFunction:
    """Deterministic test function sampled on ``grid``.

    ``gaussian_bump``  [sigma, *center]  periodized exp(-|x-c|^2 / 2 sigma^2)
    ``compact_bump``   [radius, *center] exp(-1/(1-|x-c|^2/R^2)) inside |x-c|<R
    ``sine_mode``      [k] or [k, axis]  sin(2 pi k x_axis / L_axis)
    ``constant``       [c]
    ``plateau``        [width, edge, *center]  smooth radial flat top
    Centers default to the middle of the box.
    """
    params = [float(v) for v in (params or [])]
    if name == "constant":
        c = params[0] if params else 1.0
        return GridFunction(grid, np.full(grid.dims, c), "real")
    if name == "sine_mode":
        if not params:
            raise DomainError("sine_mode needs a wavenumber")
        k = params[0]
        axis = int(params[1]) if len(params) > 1 else 0
        if not 0 <= axis < grid.ndim:
            raise DomainError("axis out of range")
        x = grid.mesh()[axis]
        return GridFunction(grid, np.sin(2 * np.pi * k * x / grid.lengths[axis]), "real")
    if name == "gaussian_bump":
        sigma = params[0] if params else min(grid.lengths) / 16
        return GridFunction(grid, _gaussian(grid, sigma, _center_from(params, grid, 1)), "real")
    if name == "compact_bump":
        radius = params[0] if params else min(grid.lengths) / 8
        if radius <= 0:
            raise DomainError("bump radius must be positive")
        if any(radius > L / 2 for L in grid.lengths):
            raise DomainError("bump radius exceeds half the box", radius=radius)
        d = grid.offsets(_center_from(params, grid, 1))
        r2 = sum(di * di for di in d) / (radius * radius)
        return GridFunction(grid, bump_profile(r2), "real")
    if name == "plateau":
        if len(params) < 2:
            raise DomainError("plateau needs width and edge")
        width, edge = params[0], params[1]
        if width <= 0 or edge <= 0:
            raise DomainError("plateau width and edge must be positive")
        d = grid.offsets(_center_from(params, grid, 2))
        r = np.sqrt(sum(di * di for di in d))
        return GridFunction(grid, 0.5 * (1 - np.tanh((r - width / 2) / edge)), "real")
    raise DomainError(f"unknown catalog function {name!r}", known=list(CATALOG))
