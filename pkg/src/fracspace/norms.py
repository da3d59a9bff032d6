"""Lebesgue, Bessel-potential Sobolev and Besov norms on periodic grids.

All physical-space integrals use the periodic trapezoidal rule. The Sobolev
norm of order alpha and exponent p is the L^p norm of the Bessel potential
``(1 + |xi|^2)^(alpha/2) f_hat``; for p = 2 it coincides with the weighted
spectral sum ``V * sum (1+|xi|^2)^alpha |f_hat|^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import power_sum
from .errors import DomainError, PreconditionError
from .grid import GridFunction, apply_multiplier, fft, frequency_grid

INF = math.inf


def as_exponent(p):
    """Accept floats, ints, ``inf`` and the strings ``"inf"``/``"infinity"``."""
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        p = float(p)
    p = float(p)
    if math.isnan(p):
        raise DomainError("exponent is NaN")
    return p


# ----------------------------------------------------------------------------
# exponent bookkeeping


def critical_exponent(p, alpha, dim):
    """Sobolev-Peetre critical exponent: ``pN/(N - alpha p)`` if N > alpha p, else inf."""
    if dim > alpha * p:
        return p * dim / (dim - alpha * p)
    return INF


def holder_theta(p0, p, p1):
    """Hoelder exponent theta with ``1/p = (1-theta)/p0 + theta/p1``; needs p0 < p < p1."""
    p0, p, p1 = as_exponent(p0), as_exponent(p), as_exponent(p1)
    if not p0 < p < p1:
        raise DomainError("Hoelder parameter needs p0 < p < p1", p0=p0, p=p, p1=p1)
    return (1 / p0 - 1 / p) / (1 / p0 - 1 / p1)


def interp_constant(theta, p):
    """Norm of the identity on (A, A)_{theta,p}: ``(theta(1-theta)p)^(-1/p)``, 1 at p = inf."""
    p = as_exponent(p)
    if not 0 < theta < 1:
        raise DomainError("theta must lie in (0, 1)", theta=theta)
    if p < 1:
        raise DomainError("p must be at least 1", p=p)
    if p == INF:
        return 1.0
    return (1.0 / (theta * (1 - theta) * p)) ** (1.0 / p)


def interpolated_exponent(p0, p1, theta):
    """``p`` with ``1/p = (1-theta)/p0 + theta/p1``."""
    inv = (1 - theta) / p0 + theta / p1
    return INF if inv == 0 else 1.0 / inv


@dataclass(frozen=True)
class ExponentBook:
    """Derived exponents for an interpolation pair ``(L^p0, L^p1)`` at ``theta``."""

    p0: float
    p1: float
    theta: float
    p: float
    c_theta_p: float

    def holder(self):
        """Hoelder parameter of ``p`` between ``p0`` and ``p1``; equals ``theta``."""
        return holder_theta(self.p0, self.p, self.p1)

    def critical(self, alpha, dim):
        return critical_exponent(self.p, alpha, dim)

    def to_dict(self):
        return {k: (None if v == INF else v) for k, v in self.__dict__.items()}


# ----------------------------------------------------------------------------
# norms


def lp_norm(f: GridFunction, p) -> float:
    p = as_exponent(p)
    if p < 1:
        raise DomainError("L^p norm needs p >= 1", p=p)
    a = np.abs(f.values)
    m = float(a.max())
    if p == INF or m == 0.0:
        return m
    s = power_sum(a / m, p) * f.grid.cell_volume
    return m * s ** (1.0 / p)


def bessel_multiplier(grid, gamma):
    """``(1 + |xi|^2)^(gamma/2)`` on the grid's frequencies."""
    return (1.0 + frequency_grid(grid).xi2) ** (0.5 * gamma)


def bessel_potential(f: GridFunction, gamma) -> GridFunction:
    """Apply the Fourier multiplier ``(1 + |xi|^2)^(gamma/2)``."""
    if gamma == 0:
        return f
    return apply_multiplier(f, bessel_multiplier(f.grid, gamma))


def _check_sobolev(alpha, p):
    p = as_exponent(p)
    if alpha < 0:
        raise DomainError("negative smoothness is not supported", alpha=alpha)
    if not 1 < p < INF:
        raise DomainError("Sobolev norms need 1 < p < inf", p=p)
    return p


def sobolev_norm(f: GridFunction, alpha, p) -> float:
    """``||(1 - Laplacian)^(alpha/2) f||_p``."""
    p = _check_sobolev(alpha, p)
    return lp_norm(bessel_potential(f, alpha), p)


def sobolev_norm_spectral(f: GridFunction, alpha) -> float:
    """H^alpha norm as the weighted spectral sum ``(V sum (1+|xi|^2)^alpha |f_hat|^2)^(1/2)``."""
    _check_sobolev(alpha, 2)
    return spectral_weighted_norm(f, bessel_multiplier(f.grid, alpha))


def spectral_weighted_norm(f: GridFunction, weight) -> float:
    """``(V sum |weight * f_hat|^2)^(1/2)`` for a nonnegative spectral weight."""
    a = np.abs(fft(f.values)) * weight
    m = float(a.max())
    if m == 0.0:
        return 0.0
    return m * math.sqrt(power_sum(a / m, 2.0) * f.grid.volume)


def besov_norm(f: GridFunction, s, p, q, quadrature=None) -> float:
    """Equivalent B^{s,p,q} norm as the (1/2, q) norm of the couple (L^p, W^{2s,p}).

    K is bounded above by mollifier splittings, so the constants are not
    canonical; only equivalence with other Besov norms is claimed.
    """
    from .interp import SplittingCouple, real_interp_norm

    p, q = as_exponent(p), as_exponent(q)
    if s <= 0:
        raise DomainError("Besov smoothness must be positive", s=s)
    if not 1 < p < INF:
        raise DomainError("Besov norms need 1 < p < inf", p=p)
    if q < 1:
        raise DomainError("Besov norms need q >= 1", q=q)
    couple = SplittingCouple(alpha0=0.0, alpha1=2.0 * s, p=p)
    return real_interp_norm(f, couple, 0.5, q, quadrature=quadrature)


def norm_by_name(f: GridFunction, space: str, alpha=0.0, p=2.0, q=2.0):
    """Dispatch used by the CLI and by shift-isometry checks."""
    if space == "lp":
        return lp_norm(f, p)
    if space == "sobolev":
        return sobolev_norm(f, alpha, p)
    if space == "hs_spectral":
        return sobolev_norm_spectral(f, alpha)
    if space == "besov":
        return besov_norm(f, alpha, p, q)
    raise PreconditionError(f"unknown space {space!r}", known=["lp", "sobolev", "hs_spectral", "besov"])
