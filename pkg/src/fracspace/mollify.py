"""Mollifiers ``(M_t u)(x) = int_{|z|<1} rho(z) u(x + t z) dz``.

``rho`` is the standard bump ``c exp(-1/(1-|z|^2))`` normalized to unit
mass. M_t is applied spectrally: the coefficient at ``xi`` is multiplied by
``rho_hat(t xi)``, the continuous Fourier transform of the bump, evaluated
once per distinct ``|xi|`` by Gauss-Legendre quadrature in the radius.
Because rho is even the sign of the argument does not matter.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import ConfigurationError, DomainError, PreconditionError
from .grid import GridFunction, GridSpec, apply_multiplier, catalog_function, frequency_grid, gradient
from .norms import as_exponent, critical_exponent, lp_norm, sobolev_norm

NORMALIZATION_TOL = 1e-10
DEGENERATE_RESIDUAL = 1e-14

# unit-sphere surface measure for N = 1, 2, 3
_SPHERE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


@dataclass(frozen=True)
class MollifierSpec:
    t: float
    nodes: int = 256

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise DomainError("mollifier scale t must lie in (0, 1)", t=self.t)
        if int(self.nodes) < 16:
            raise ConfigurationError("at least 16 radial quadrature nodes required", nodes=self.nodes)


class BumpTransform:
    """Fourier transform of the normalized standard bump in ``dim`` dimensions."""

    def __init__(self, dim, nodes=256):
        if dim not in _SPHERE:
            raise DomainError("dimension must be 1, 2 or 3", dim=dim)
        x, w = np.polynomial.legendre.leggauss(int(nodes))
        r = 0.5 * (x + 1.0)
        w = 0.5 * w * np.exp(-1.0 / (1.0 - r * r)) * r ** (dim - 1) * _SPHERE[dim]
        self.dim = dim
        self.nodes = int(nodes)
        self.mass_unnormalized = float(_kernels.pairwise_sum(w))
        self.r = r
        self.weights = w / self.mass_unnormalized
        # independent adaptive check of the unit-mass normalization
        ref, _ = integrate.quad(
            lambda s: math.exp(-1.0 / (1.0 - s * s)) * s ** (dim - 1), 0.0, 1.0,
            epsabs=0.0, epsrel=1e-13, limit=200,
        )
        self.normalization_error = abs(self.mass_unnormalized / (_SPHERE[dim] * ref) - 1.0)
        if self.normalization_error > NORMALIZATION_TOL:
            raise ConfigurationError(
                "bump normalization failed verification", error=self.normalization_error
            )

    def density(self, z2):
        """``rho`` at squared radius ``z2``."""
        from .grid import bump_profile

        return bump_profile(z2) / self.mass_unnormalized

    def __call__(self, k):
        """Return ``(rho_hat(k), 1 - rho_hat(k))`` for radial frequencies ``k``."""
        k = np.asarray(k, dtype=np.float64)
        value, one_minus = _kernels.radial_transform(k.ravel(), self.r, self.weights, self.dim)
        return value.reshape(k.shape), one_minus.reshape(k.shape)

    def second_moment(self):
        """``int rho(z) |z|^2 dz``."""
        return float(_kernels.pairwise_sum(self.weights * self.r * self.r))


@functools.lru_cache(maxsize=8)
def bump_transform(dim, nodes=256) -> BumpTransform:
    return BumpTransform(dim, nodes)


@functools.lru_cache(maxsize=256)
def _multipliers(grid: GridSpec, t, nodes):
    xi2 = frequency_grid(grid).xi2
    uniq, inverse = np.unique(xi2, return_inverse=True)
    value, one_minus = bump_transform(grid.ndim, nodes)(t * np.sqrt(uniq))
    m = value[inverse].reshape(grid.dims)
    om = one_minus[inverse].reshape(grid.dims)
    m.setflags(write=False)
    om.setflags(write=False)
    return m, om


def mollifier_multipliers(grid: GridSpec, spec: MollifierSpec):
    """Spectral multipliers of ``M_t`` and of ``I - M_t`` on ``grid``."""
    if any(spec.t >= L / 2 for L in grid.lengths):
        raise DomainError("mollifier displacement must stay below half the box", t=spec.t)
    return _multipliers(grid, float(spec.t), int(spec.nodes))


def _spec(spec_or_t):
    return spec_or_t if isinstance(spec_or_t, MollifierSpec) else MollifierSpec(float(spec_or_t))


def mollify(u: GridFunction, spec) -> GridFunction:
    """``M_t u``; ``spec`` is a MollifierSpec or a bare scale ``t``."""
    m, _ = mollifier_multipliers(u.grid, _spec(spec))
    return apply_multiplier(u, m)


def mollify_residual(u: GridFunction, spec) -> GridFunction:
    """``u - M_t u`` computed from ``1 - rho_hat`` directly (no cancellation)."""
    _, om = mollifier_multipliers(u.grid, _spec(spec))
    return apply_multiplier(u, om)


def gradient_norm(u: GridFunction, p) -> float:
    """``|| |grad u| ||_p`` with the spectral gradient."""
    parts = gradient(u)
    mag = np.sqrt(sum(np.abs(g.values) ** 2 for g in parts))
    return lp_norm(GridFunction(u.grid, mag, "real"), p)


# ----------------------------------------------------------------------------
# residual decay fit


@dataclass
class ResidualFit:
    t_nodes: np.ndarray
    residuals: np.ndarray
    grad_norm: float
    p: float
    slope: float | None
    constant: float | None
    degenerate: bool

    def within_bound(self, constant=None, rtol=1e-12):
        """True when ``residual <= C t ||grad u||_p`` at every node."""
        c = self.constant if constant is None else constant
        if c is None:
            return bool(np.all(self.residuals <= DEGENERATE_RESIDUAL))
        bound = c * self.t_nodes * self.grad_norm
        return bool(np.all(self.residuals <= bound * (1 + rtol)))

    def to_dict(self):
        return {
            "p": self.p,
            "t": self.t_nodes.tolist(),
            "residual": self.residuals.tolist(),
            "grad_norm": self.grad_norm,
            "slope": self.slope,
            "constant": self.constant,
            "degenerate": self.degenerate,
        }


def residual_bound_check(u: GridFunction, p, t_nodes, nodes=256) -> ResidualFit:
    """Measure ``||u - M_t u||_p`` over ``t_nodes`` and fit its log-log slope.

    The fit is skipped (``degenerate``) when some residual is below 1e-14.
    """
    p = as_exponent(p)
    if not 1 < p < math.inf:
        raise DomainError("residual check needs 1 < p < inf", p=p)
    t_nodes = np.asarray(t_nodes, dtype=np.float64)
    res = np.array([lp_norm(mollify_residual(u, MollifierSpec(t, nodes)), p) for t in t_nodes])
    g = gradient_norm(u, p)
    if np.any(res < DEGENERATE_RESIDUAL) or g == 0.0:
        return ResidualFit(t_nodes, res, g, p, None, None, True)
    slope = float(np.polyfit(np.log(t_nodes), np.log(res), 1)[0])
    constant = float(np.max(res / (t_nodes * g)))
    return ResidualFit(t_nodes, res, g, p, slope, constant, False)


# ----------------------------------------------------------------------------
# sigma(t) = ||I - M_t|| estimated on a frozen test set


def smooth_test_set(grid: GridSpec, name="smooth-v1"):
    """Named, versioned list of ``(label, GridFunction)`` smooth test functions."""
    if name == "constants-v1":
        return [(f"constant_{c}", catalog_function("constant", [c], grid)) for c in (1.0, -2.5)]
    if name != "smooth-v1":
        raise ConfigurationError(f"unknown test set {name!r}", known=["smooth-v1", "constants-v1"])
    L = min(grid.lengths)
    members = [
        ("gaussian_L/8", catalog_function("gaussian_bump", [L / 8], grid)),
        ("gaussian_L/16", catalog_function("gaussian_bump", [L / 16], grid)),
        ("gaussian_L/32", catalog_function("gaussian_bump", [L / 32], grid)),
        ("compact_bump_L/4", catalog_function("compact_bump", [L / 4], grid)),
        ("plateau_L/4", catalog_function("plateau", [L / 4, L / 32], grid)),
    ]
    for k in (1, 2, 4):
        members.append((f"sine_{k}", catalog_function("sine_mode", [k], grid)))
    multi = sum(
        (catalog_function("sine_mode", [k], grid) * (1.0 / k) for k in (1, 3, 5)),
        catalog_function("constant", [0.0], grid),
    )
    members.append(("multiscale_1_3_5", multi))
    return members


@dataclass
class SigmaCurve:
    t_nodes: np.ndarray
    sigma_hat: np.ndarray
    source_bound: np.ndarray
    descriptor: dict = field(default_factory=dict)

    @property
    def decay_ratio(self):
        """``sigma_hat`` at the smallest t over ``sigma_hat`` at the largest t."""
        lo, hi = int(np.argmin(self.t_nodes)), int(np.argmax(self.t_nodes))
        if self.sigma_hat[hi] == 0.0:
            return 0.0
        return float(self.sigma_hat[lo] / self.sigma_hat[hi])

    def decays(self, factor=0.1):
        return self.decay_ratio <= factor

    def to_rows(self):
        return [(float(t), float(s)) for t, s in zip(self.t_nodes, self.sigma_hat)]


def sigma_estimate(
    source_alpha, source_p, target_p, t_nodes, test_set, target_alpha=0.0, nodes=256
) -> SigmaCurve:
    """Test-set estimate of ``||I - M_t||`` from W^{m0,p0} into W^{m1,p1}.

    A maximum over finitely many functions, so a lower bound of the operator norm.

    ``test_set`` is a list of GridFunctions or ``(label, GridFunction)``
    pairs. The returned curve also carries ``max ||M_t f|| / ||f||`` in the
    source norm (uniform boundedness of the family).
    """
    m0, m1 = float(source_alpha), float(target_alpha)
    p0, p1 = as_exponent(source_p), as_exponent(target_p)
    members = [m if isinstance(m, tuple) else (f"f{i}", m) for i, m in enumerate(test_set or [])]
    if not members:
        raise PreconditionError("test set is empty")
    dim = members[0][1].grid.ndim
    if not 0 <= m1 < m0:
        raise PreconditionError("need 0 <= target order < source order", m0=m0, m1=m1)
    if not 1 < p0 < p1 < math.inf:
        raise PreconditionError("need 1 < p0 < p1 < inf", p0=p0, p1=p1)
    if not 1 / p0 - 1 / p1 < (m0 - m1) / dim:
        raise PreconditionError(
            "exponents violate 1/p0 - 1/p1 < (m0 - m1)/N",
            lhs=1 / p0 - 1 / p1, rhs=(m0 - m1) / dim,
        )
    t_nodes = np.asarray(t_nodes, dtype=np.float64)
    sig = np.zeros(t_nodes.shape)
    bound = np.zeros(t_nodes.shape)

    def target_norm(f):
        return sobolev_norm(f, m1, p1) if m1 > 0 else lp_norm(f, p1)

    for _, f in members:
        src = sobolev_norm(f, m0, p0)
        if src == 0.0:
            continue
        for i, t in enumerate(t_nodes):
            spec = MollifierSpec(float(t), nodes)
            sig[i] = max(sig[i], target_norm(mollify_residual(f, spec)) / src)
            bound[i] = max(bound[i], sobolev_norm(mollify(f, spec), m0, p0) / src)
    descriptor = {
        "source": {"alpha": m0, "p": p0},
        "target": {"alpha": m1, "p": p1},
        "critical_exponent": critical_exponent(p0, m0 - m1, dim),
        "members": [label for label, _ in members],
        "dims": list(members[0][1].grid.dims),
        "L": list(members[0][1].grid.lengths),
    }
    return SigmaCurve(t_nodes, sig, bound, descriptor)
