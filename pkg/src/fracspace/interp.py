"""K-functionals, real and complex interpolation norms, and the interpolation bound.

Two kinds of couples are supported.

``CoupleSpec``
    Fourier-diagonal Hilbert couples with spectral weights ``w0``, ``w1``.
    Their quadratic K-functional

        K2(t, a)^2 = V * sum |a_hat|^2 t^2 w0^2 w1^2 / (w0^2 + t^2 w1^2)

    is the exact frequency-wise minimum of ``||a0||_0^2 + t^2 ||a1||_1^2`` and
    brackets the linear K-functional: ``K2 <= K <= sqrt(2) K2``.

``SplittingCouple``
    ``(W^{alpha0,p}, W^{alpha1,p})`` for any ``1 < p < inf``. Here K is only
    bounded above, by the mollifier splittings ``a = (I - M_tau) a + M_tau a``
    together with the trivial splittings ``a = a + 0`` and ``a = 0 + a``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from ._kernels._pykernels import _rows_pairwise
from .errors import (
    ConfigurationError,
    DomainError,
    PreconditionError,
    TruncationError,
    UnsupportedOperatorError,
)
from .grid import GridFunction, apply_multiplier, fft, frequency_grid
from .mollify import MollifierSpec, mollifier_multipliers
from .norms import (
    INF,
    ExponentBook,
    as_exponent,
    interp_constant,
    interpolated_exponent,
    lp_norm,
    sobolev_norm,
    spectral_weighted_norm,
)

SHAPE_SLACK = 1e-10


def _bessel_weight(s):
    return lambda xi2: (1.0 + xi2) ** (0.5 * s)


@dataclass(frozen=True)
class CoupleSpec:
    """Fourier-diagonal couple; weights map ``|xi|^2`` arrays to positive arrays."""

    label: str
    weight0: Callable = field(compare=False)
    weight1: Callable = field(compare=False)
    params: tuple = ()

    @classmethod
    def l2_hs(cls, s):
        return cls("L2_Hs", _bessel_weight(0.0), _bessel_weight(s), (0.0, float(s)))

    @classmethod
    def hs0_hs1(cls, s0, s1):
        return cls("Hs0_Hs1", _bessel_weight(s0), _bessel_weight(s1), (float(s0), float(s1)))

    @classmethod
    def same_space(cls, s=0.0):
        w = _bessel_weight(s)
        return cls("same_space", w, w, (float(s), float(s)))

    def weights(self, grid):
        xi2 = frequency_grid(grid).xi2
        w0 = np.broadcast_to(np.asarray(self.weight0(xi2), dtype=np.float64), grid.dims)
        w1 = np.broadcast_to(np.asarray(self.weight1(xi2), dtype=np.float64), grid.dims)
        if not (np.all(w0 > 0) and np.all(w1 > 0) and np.all(np.isfinite(w0)) and np.all(np.isfinite(w1))):
            raise DomainError("couple weights must be positive and finite")
        return w0, w1

    def norm0(self, a: GridFunction):
        return spectral_weighted_norm(a, self.weights(a.grid)[0])

    def norm1(self, a: GridFunction):
        return spectral_weighted_norm(a, self.weights(a.grid)[1])


@dataclass(frozen=True)
class SplittingCouple:
    """``(W^{alpha0,p}, W^{alpha1,p})`` with ``alpha0 < alpha1``; alpha 0 means L^p."""

    alpha0: float
    alpha1: float
    p: float = 2.0

    def __post_init__(self):
        if not 0 <= self.alpha0 < self.alpha1:
            raise PreconditionError("need 0 <= alpha0 < alpha1", alpha0=self.alpha0, alpha1=self.alpha1)
        if not 1 < self.p < INF:
            raise PreconditionError("need 1 < p < inf", p=self.p)

    @property
    def label(self):
        return f"W{self.alpha0:g},{self.p:g}_W{self.alpha1:g},{self.p:g}"

    def norm0(self, a):
        return lp_norm(a, self.p) if self.alpha0 == 0 else sobolev_norm(a, self.alpha0, self.p)

    def norm1(self, a):
        return sobolev_norm(a, self.alpha1, self.p)


COUPLE_LABELS = ("L2_Hs", "Hs0_Hs1", "same_space", "Lp_W1p")


def couple_from_label(label, s=1.0, s0=0.0, s1=1.0, p=2.0):
    """Build a couple from its label; ``Lp_W1p`` is the splitting couple (L^p, W^{1,p})."""
    if label in ("L2_Hs", "L2_H1"):
        return CoupleSpec.l2_hs(1.0 if label == "L2_H1" else s)
    if label == "Hs0_Hs1":
        return CoupleSpec.hs0_hs1(s0, s1)
    if label == "same_space":
        return CoupleSpec.same_space(s)
    if label == "Lp_W1p":
        return SplittingCouple(0.0, 1.0, p)
    raise ConfigurationError(f"unknown couple {label!r}", known=list(COUPLE_LABELS) + ["L2_H1"])


@dataclass
class KCurve:
    t_nodes: np.ndarray
    K_values: np.ndarray
    kind: str

    def shape_violations(self, slack=SHAPE_SLACK):
        """Count nodes breaking ``K`` nondecreasing or ``K/t`` nonincreasing."""
        t, k = self.t_nodes, self.K_values
        order = np.argsort(t)
        t, k = t[order], k[order]
        scale = max(float(np.max(np.abs(k))), 1e-300)
        up = np.diff(k) < -slack * scale
        ratio = k / t
        down = np.diff(ratio) > slack * np.maximum(np.abs(ratio[:-1]), scale * 1e-300)
        return int(np.sum(up) + np.sum(down))

    def to_rows(self):
        return [(float(t), float(k)) for t, k in zip(self.t_nodes, self.K_values)]


# ----------------------------------------------------------------------------
# K sources: callables mapping a t array to K values


def _check_t(t_nodes):
    t = np.atleast_1d(np.asarray(t_nodes, dtype=np.float64))
    if t.size == 0 or np.any(~(t > 0)) or np.any(~np.isfinite(t)):
        raise DomainError("t nodes must be positive and finite")
    return t


def _k2_source(a: GridFunction, couple: CoupleSpec):
    w0, w1 = couple.weights(a.grid)
    c2 = (np.abs(fft(a.values)) ** 2).ravel()
    ratio = (w1 / w0).ravel()
    w0 = w0.ravel()
    volume = a.grid.volume
    base = c2 * w0 * w0

    def source(t):
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = np.empty(t.shape)
        flat = t.ravel()
        chunk = max(1, 2**20 // max(base.size, 1))
        res = np.empty(flat.size)
        for start in range(0, flat.size, chunk):
            tt = flat[start : start + chunk, None]
            r2 = (tt * ratio) ** 2
            with np.errstate(over="ignore", invalid="ignore"):
                frac = np.where(np.isinf(r2), 1.0, r2 / (1.0 + r2))
            res[start : start + chunk] = np.sqrt(volume * _rows_pairwise(base * frac))
        out.ravel()[:] = res
        return out

    return source


def k2_diagonal(a: GridFunction, couple: CoupleSpec, t_nodes) -> KCurve:
    """Exact quadratic K-functional of a diagonal couple at ``t_nodes``."""
    if not isinstance(couple, CoupleSpec):
        raise PreconditionError("k2_diagonal needs a diagonal couple")
    t = _check_t(t_nodes)
    return KCurve(t, _k2_source(a, couple)(t), "exact_K2")


DEFAULT_TAUS = np.geomspace(1e-4, 0.999, 48)


def _splitting_source(a: GridFunction, couple: SplittingCouple, taus=None, nodes=256):
    taus = DEFAULT_TAUS if taus is None else np.asarray(taus, dtype=np.float64)
    if taus.size == 0:
        raise ConfigurationError("empty tau grid for mollifier splittings")
    n0 = couple.norm0(a)
    n1 = couple.norm1(a)
    # trivial splittings: a0 = a (cost n0) and a1 = a (cost t n1)
    A = [n0, 0.0]
    B = [0.0, n1]
    for tau in taus:
        m, om = mollifier_multipliers(a.grid, MollifierSpec(float(tau), nodes))
        A.append(couple.norm0(apply_multiplier(a, om)))
        B.append(couple.norm1(apply_multiplier(a, m)))
    A = np.asarray(A)
    B = np.asarray(B)

    def source(t):
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return np.min(A[None, :] + t.reshape(-1, 1) * B[None, :], axis=1).reshape(t.shape)

    return source


def k_splitting_upper(a: GridFunction, couple, t_nodes, taus=None, nodes=256) -> KCurve:
    """Upper bound for K from mollifier splittings, minimized over ``taus``."""
    if isinstance(couple, str):
        couple = couple_from_label(couple)
    if not isinstance(couple, SplittingCouple):
        raise PreconditionError("k_splitting_upper needs a splitting couple such as Lp_W1p")
    t = _check_t(t_nodes)
    return KCurve(t, _splitting_source(a, couple, taus, nodes)(t), "splitting_upper")


def k_source(a: GridFunction, couple, taus=None, nodes=256):
    if isinstance(couple, CoupleSpec):
        return _k2_source(a, couple)
    if isinstance(couple, SplittingCouple):
        return _splitting_source(a, couple, taus, nodes)
    raise PreconditionError("no K source for this couple")


# ----------------------------------------------------------------------------
# real method


@dataclass(frozen=True)
class QuadratureConfig:
    """Midpoint rule in ``log t`` on ``[t_min, t_max]`` plus asymptotic tails."""

    nodes: int = 400
    t_min: float = 1e-6
    t_max: float = 1e6
    truncation_tol: float = 0.01

    def __post_init__(self):
        if self.nodes < 2 or not 0 < self.t_min < self.t_max:
            raise ConfigurationError("invalid quadrature configuration")

    def grid(self):
        """Midpoints and the common step in ``log t``."""
        lo, hi = math.log(self.t_min), math.log(self.t_max)
        h = (hi - lo) / self.nodes
        return np.exp(lo + h * (np.arange(self.nodes) + 0.5)), h


@dataclass
class InterpResult:
    value: float
    truncation: float
    theta: float
    q: float


def real_interp(a: GridFunction, couple, theta, q, quadrature=None, k=None, strict=False) -> InterpResult:
    """Quadrature of ``(int (t^-theta K(t,a))^q dt/t)^(1/q)``.

    ``k`` overrides the couple's K source with any callable ``t -> K``.
    Beyond ``[t_min, t_max]`` the integrand is continued with ``K ~ c t``
    (below) and ``K ~ const`` (above); those tails are added in closed form.
    ``truncation`` estimates how far K still is from that asymptotic regime,
    as the relative change of the tail terms between the two outermost nodes.
    """
    q = as_exponent(q)
    if not 0 < theta < 1:
        raise DomainError("theta must lie in (0, 1)", theta=theta)
    if q < 1:
        raise DomainError("q must be at least 1", q=q)
    quadrature = quadrature or QuadratureConfig()
    source = k if k is not None else k_source(a, couple)
    t, h = quadrature.grid()
    kv = np.asarray(source(t), dtype=np.float64)
    if np.any(~np.isfinite(kv)) or np.any(kv < 0):
        raise DomainError("K values must be finite and nonnegative")
    g = t ** (-theta) * kv
    if q == INF:
        return InterpResult(_sup_refined(source, theta, t, g), 0.0, theta, q)
    if not np.any(g > 0):
        return InterpResult(0.0, 0.0, theta, q)
    scale = float(g.max())
    body = float(_rows_pairwise(((g / scale) ** q).reshape(1, -1))[0]) * h

    def lower_tail(i):
        c0 = kv[i] / t[i]
        return (c0 * quadrature.t_min ** (1 - theta) / scale) ** q / ((1 - theta) * q)

    def upper_tail(i):
        return (kv[i] * quadrature.t_max ** (-theta) / scale) ** q / (theta * q)

    tails = lower_tail(0) + upper_tail(-1)
    total = body + tails
    drift = abs(lower_tail(0) - lower_tail(1)) + abs(upper_tail(-1) - upper_tail(-2))
    truncation = drift / total
    if truncation > quadrature.truncation_tol:
        msg = f"truncation residual {truncation:.3g} exceeds {quadrature.truncation_tol:g}"
        if strict:
            raise TruncationError(msg, truncation=truncation)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return InterpResult(scale * total ** (1.0 / q), truncation, theta, q)


def _sup_refined(source, theta, t, g):
    """Largest node value of ``t^-theta K`` refined by a bounded 1-D search."""
    i = int(np.argmax(g))
    best = float(g[i])
    if best == 0.0:
        return 0.0
    lo = math.log(t[max(i - 1, 0)])
    hi = math.log(t[min(i + 1, len(t) - 1)])

    def neg(s):
        tt = math.exp(s)
        return -float(tt ** (-theta) * np.asarray(source(np.array([tt])))[0])

    res = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return max(best, -float(res.fun))


def real_interp_norm(a: GridFunction, couple, theta, q, quadrature=None, k=None, strict=False) -> float:
    """Real-method (theta, q) norm; see :func:`real_interp`."""
    return real_interp(a, couple, theta, q, quadrature, k, strict).value


# ----------------------------------------------------------------------------
# complex method (diagonal closed form)


def complex_diag_norm(a: GridFunction, couple: CoupleSpec, theta) -> float:
    """Norm in ``[A0, A1]_theta`` for a diagonal couple: weight ``w0^(1-theta) w1^theta``."""
    if not isinstance(couple, CoupleSpec):
        raise PreconditionError("complex_diag_norm needs a diagonal couple")
    if not 0 <= theta <= 1:
        raise DomainError("theta must lie in [0, 1]", theta=theta)
    w0, w1 = couple.weights(a.grid)
    return spectral_weighted_norm(a, w0 ** (1 - theta) * w1**theta)


# ----------------------------------------------------------------------------
# operator bound check


@dataclass(frozen=True)
class DiagonalOperator:
    """Fourier multiplier; ``symbol`` maps ``|xi|^2`` to multiplier values."""

    symbol: Callable = field(compare=False)
    label: str = "multiplier"

    @classmethod
    def bessel(cls, gamma):
        return cls(_bessel_weight(gamma), f"bessel({gamma:g})")

    @classmethod
    def identity(cls):
        return cls(lambda xi2: np.ones_like(xi2), "identity")

    def multiplier(self, grid):
        return np.broadcast_to(np.asarray(self.symbol(frequency_grid(grid).xi2)), grid.dims)


@dataclass
class BoundReport:
    endpoint_norms: tuple
    bound: float
    worst_ratio: float
    n_tested: int
    holds: bool
    method: str

    def to_dict(self):
        return {
            "endpoint_norms": list(self.endpoint_norms),
            "bound": self.bound,
            "worst_ratio": self.worst_ratio,
            "n_tested": self.n_tested,
            "holds": self.holds,
            "method": self.method,
        }


def check_operator_bound(
    T, source: CoupleSpec, target: CoupleSpec, theta, q, test_set, method="real", rtol=1e-6, quadrature=None
) -> BoundReport:
    """Check ``||T a||_B <= ||T||_{A0->B0}^(1-theta) ||T||_{A1->B1}^theta ||a||_A``.

    ``T`` is a DiagonalOperator or a MollifierSpec. Endpoint norms are exact
    suprema of the multiplier ratio over the grid. ``method`` picks the real
    (theta, q) norm built on K2 or the diagonal complex norm.
    """
    if not test_set:
        raise PreconditionError("test set is empty")
    if not (isinstance(source, CoupleSpec) and isinstance(target, CoupleSpec)):
        raise UnsupportedOperatorError("endpoint norms need diagonal couples")
    grid = test_set[0].grid
    if isinstance(T, DiagonalOperator):
        m = T.multiplier(grid)
    elif isinstance(T, MollifierSpec):
        m = mollifier_multipliers(grid, T)[0]
    else:
        raise UnsupportedOperatorError("operator must be a Fourier multiplier or a mollifier")
    v0, v1 = source.weights(grid)
    w0, w1 = target.weights(grid)
    M0 = float(np.max(np.abs(m) * w0 / v0))
    M1 = float(np.max(np.abs(m) * w1 / v1))
    bound = M0 ** (1 - theta) * M1**theta

    def norm(f, couple):
        if method == "complex":
            return complex_diag_norm(f, couple, theta)
        return real_interp_norm(f, couple, theta, q, quadrature)

    worst = 0.0
    for a in test_set:
        na = norm(a, source)
        if na == 0.0:
            continue
        worst = max(worst, norm(apply_multiplier(a, m), target) / na)
    return BoundReport((M0, M1), bound, worst, len(test_set), worst <= bound * (1 + rtol), method)


# ----------------------------------------------------------------------------
# exponents


def exponent_book(p0, p1, theta) -> ExponentBook:
    """Interpolated Lebesgue exponent and ``c_{theta,p}`` for ``(L^p0, L^p1)``."""
    p0, p1 = as_exponent(p0), as_exponent(p1)
    if not 1 <= p0 < p1 <= INF:
        raise DomainError("need 1 <= p0 < p1 <= inf", p0=p0, p1=p1)
    if not 0 < theta < 1:
        raise DomainError("theta must lie in (0, 1)", theta=theta)
    p = interpolated_exponent(p0, p1, theta)
    return ExponentBook(p0, p1, float(theta), p, interp_constant(theta, p))


def monotonicity_constant(theta, q0, q1):
    """Constant C with ``||a||_{theta,q1} <= C ||a||_{theta,q0}`` for q0 <= q1.

    From ``t^-theta K(t) <= ||a||_{theta,q0} / c_{theta,q0}`` (K nondecreasing,
    K/t nonincreasing): ``C = c_{theta,q0}^(q0/q1 - 1)``.
    """
    q0, q1 = as_exponent(q0), as_exponent(q1)
    if not 1 <= q0 <= q1:
        raise DomainError("need 1 <= q0 <= q1", q0=q0, q1=q1)
    c = interp_constant(theta, q0)
    expo = -1.0 if q1 == INF else q0 / q1 - 1.0
    return c**expo
