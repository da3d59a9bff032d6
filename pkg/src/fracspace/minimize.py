"""Constrained minimization of the H^alpha energy on an L^q sphere.

Minimizes ``E(u) = ||u||_{H^alpha}^2 = V sum (1+|xi|^2)^alpha |u_hat|^2`` subject
to ``F(u) = int b |u|^q = 1`` (``b = 1`` for the plain problem). At a critical
point ``A u = lam b |u|^(q-2) u`` with ``A = (1 - Laplacian)^alpha``, and testing
with ``u`` gives ``lam = E(u)``.

Two normalized gradient flows are available, both followed by rescaling onto
the constraint:

``semi-implicit`` (default)
    ``u <- (1 + tau A)^(-1) (u + tau lam b |u|^(q-2) u)``
``explicit``
    ``u <- u - tau (A u - lam b |u|^(q-2) u)``

A step that raises the energy is rejected and ``tau`` halved; two rejections
in a row raise StepSizeError.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, optimize

from ._kernels import power_sum
from .errors import DomainError, PreconditionError, StepSizeError
from .grid import GridFunction, GridSpec, catalog_function, fft, frequency_grid, ifft
from .norms import critical_exponent

SEED_CONSTANT = 20240611
MONOTONE_SLACK = 1e-12
CONSTRAINT_TOL = 1e-10


@dataclass
class MinimizeProblem:
    alpha: float
    q: float
    grid: GridSpec
    weight_excess: GridFunction | float | None = None
    b_inf: float = 1.0
    tau: float | None = None
    tol_el: float = 1e-8
    max_iter: int = 20000
    scheme: str = "semi-implicit"
    diagnostic: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive", alpha=self.alpha)
        crit = self.critical
        lower_ok = self.q > 2 or (self.diagnostic and self.q == 2)
        if not (lower_ok and self.q < crit):
            raise PreconditionError(
                "need 2 < q < 2*_alpha", q=self.q, critical=crit, violated="2 < q < 2*"
            )
        if self.scheme not in ("semi-implicit", "explicit"):
            raise PreconditionError(f"unknown scheme {self.scheme!r}")
        if self.weight_excess is not None:
            if not self.b_inf > 0:
                raise PreconditionError("b_inf must be positive", b_inf=self.b_inf)
            excess = self.excess_values()
            if not float(np.min(excess)) > 0:
                raise PreconditionError(
                    "weight must exceed b_inf everywhere", min_excess=float(np.min(excess)), violated="b > b_inf"
                )
        if self.tau is None:
            self.tau = self.default_tau()
        if not self.tau > 0:
            raise PreconditionError("tau must be positive", tau=self.tau)

    @property
    def critical(self):
        return critical_exponent(2.0, self.alpha, self.grid.ndim)

    @classmethod
    def penalty(cls, alpha, q, grid, excess, b_inf=1.0, **kw):
        """Problem with weight ``b = b_inf + excess`` (``excess`` strictly positive)."""
        return cls(alpha, q, grid, excess, b_inf, **kw)

    def excess_values(self):
        e = self.weight_excess
        vals = e.values if isinstance(e, GridFunction) else np.full(self.grid.dims, float(e))
        return np.broadcast_to(vals, self.grid.dims)

    def weight(self):
        if self.weight_excess is None:
            return None
        return self.b_inf + self.excess_values()

    def default_tau(self):
        if self.scheme == "explicit":
            return 0.5 / (1.0 + frequency_grid(self.grid).xi_max ** 2) ** self.alpha
        return 1.0

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "q": self.q,
            "grid": self.grid.to_dict(),
            "b_inf": self.b_inf if self.weight_excess is not None else None,
            "tau": self.tau,
            "tol_el": self.tol_el,
            "max_iter": self.max_iter,
            "scheme": self.scheme,
        }


@dataclass
class MinimizerResult:
    u: GridFunction
    energy: float
    multiplier: float
    el_residual: float
    iterations: int
    trace: list = field(default_factory=list)
    converged: bool = False
    constraint_error: float = 0.0
    tau: float = 0.0
    strictly_below: bool | None = None

    @property
    def kappa_hat(self):
        return self.energy

    def to_dict(self):
        return {
            "kappa_hat": self.energy,
            "multiplier": self.multiplier,
            "el_residual": self.el_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "constraint_error": self.constraint_error,
            "tau_final": self.tau,
            "strictly_below": self.strictly_below,
            "trace": list(self.trace),
        }


def default_seed(grid: GridSpec, perturbation=0.01) -> GridFunction:
    """Centered gaussian of width L/16 plus a fixed 1% pseudo-random perturbation."""
    base = catalog_function("gaussian_bump", [min(grid.lengths) / 16], grid)
    noise = np.random.default_rng(SEED_CONSTANT).standard_normal(grid.dims)
    return base + perturbation * float(np.max(base.values)) * noise


class _Functional:
    def __init__(self, problem: MinimizeProblem):
        self.p = problem
        self.m = (1.0 + frequency_grid(problem.grid).xi2) ** problem.alpha
        self.sqrt_m = np.sqrt(self.m)
        self.b = problem.weight()
        self.dv = problem.grid.cell_volume
        self.volume = problem.grid.volume

    def energy(self, uhat):
        a = np.abs(uhat) * self.sqrt_m
        s = float(a.max())
        return 0.0 if s == 0 else s * s * power_sum(a / s, 2.0) * self.volume

    def constraint(self, u):
        a = np.abs(u) if self.b is None else np.abs(u) * self.b ** (1.0 / self.p.q)
        s = float(a.max())
        return 0.0 if s == 0 else s**self.p.q * power_sum(a / s, self.p.q) * self.dv

    def nonlinear(self, u):
        out = np.abs(u) ** (self.p.q - 2) * u
        return out if self.b is None else self.b * out

    def normalize(self, u):
        return u / self.constraint(u) ** (1.0 / self.p.q)

    def el_residual(self, u, uhat, lam):
        au = ifft(self.m * uhat).real
        r = au - lam * self.nonlinear(u)
        return math.sqrt(power_sum(r, 2.0) / power_sum(au, 2.0))


def _solve(problem: MinimizeProblem, seed: GridFunction | None) -> MinimizerResult:
    seed = default_seed(problem.grid) if seed is None else seed
    if seed.grid != problem.grid:
        raise PreconditionError("seed lives on a different grid")
    if seed.max_modulus() == 0.0:
        raise DomainError("seed must be nonzero")
    fn = _Functional(problem)
    u = fn.normalize(np.array(seed.values.real, dtype=np.float64))
    uhat = fft(u)
    energy = fn.energy(uhat)
    trace = [energy]
    tau = float(problem.tau)
    rejected = False
    it = 0
    resid = fn.el_residual(u, uhat, energy)
    while resid > problem.tol_el and it < problem.max_iter:
        it += 1
        nl = fn.nonlinear(u)
        if problem.scheme == "semi-implicit":
            v = ifft(fft(u + tau * energy * nl) / (1.0 + tau * fn.m)).real
        else:
            v = u - tau * (ifft(fn.m * uhat).real - energy * nl)
        v = fn.normalize(v)
        vhat = fft(v)
        e_new = fn.energy(vhat)
        if not math.isfinite(e_new) or e_new > energy * (1 + MONOTONE_SLACK):
            if rejected:
                raise StepSizeError(
                    "energy increased on two consecutive steps; reduce tau", tau=tau, iteration=it
                )
            rejected = True
            tau *= 0.5
            continue
        rejected = False
        u, uhat, energy = v, vhat, e_new
        trace.append(energy)
        resid = fn.el_residual(u, uhat, energy)
    result = MinimizerResult(
        GridFunction(problem.grid, u, "real"),
        energy,
        energy,
        resid,
        it,
        trace,
        resid <= problem.tol_el,
        abs(fn.constraint(u) - 1.0),
        tau,
    )
    return result


def solve_kappa(problem: MinimizeProblem, seed: GridFunction | None = None) -> MinimizerResult:
    """Least energy ``kappa_hat`` on ``{||u||_q = 1}``."""
    if problem.weight_excess is not None:
        raise PreconditionError("solve_kappa takes an unweighted problem; use solve_penalty")
    return _solve(problem, seed)


def solve_penalty(problem: MinimizeProblem, seed=None, companion: MinimizerResult | None = None):
    """Least energy on ``{int b |u|^q = 1}``; compares against ``companion`` when given."""
    if problem.weight_excess is None:
        raise PreconditionError("solve_penalty needs a weight b > b_inf", violated="b > b_inf")
    result = _solve(problem, seed)
    if companion is not None:
        result.strictly_below = result.energy < companion.energy
    return result


# ----------------------------------------------------------------------------
# random-restart oracle


def rayleigh_oracle(problem: MinimizeProblem, restarts=20, seed=SEED_CONSTANT, gtol=1e-10):
    """Best ``E(u) / F(u)^(2/q)`` from L-BFGS runs on random smooth seeds.

    Independent of the flow: it minimizes the scale-invariant quotient
    directly over grid values with an analytic gradient.
    """
    fn = _Functional(problem)
    q = problem.q
    rng = np.random.default_rng(seed)
    grid = problem.grid
    dims = grid.dims
    h = grid.cell_volume

    def fun(x):
        u = x.reshape(dims)
        au = ifft(fn.m * fft(u)).real
        e = h * float(np.sum(u * au))
        nl = fn.nonlinear(u)
        f = h * float(np.sum(nl * u))
        g = (2 * h * au) / f ** (2 / q) - (2 / q) * e * f ** (-2 / q - 1) * (q * h * nl)
        return e / f ** (2 / q), g.ravel()

    best = math.inf
    values = []
    for _ in range(restarts):
        x0 = ndimage.gaussian_filter(rng.standard_normal(dims), sigma=[n / 16 for n in dims], mode="wrap")
        res = optimize.minimize(fun, x0.ravel(), jac=True, method="L-BFGS-B",
                                options={"gtol": gtol, "ftol": 1e-15, "maxiter": 20000})
        values.append(float(res.fun))
        best = min(best, float(res.fun))
    return best, values


# ----------------------------------------------------------------------------
# symmetry diagnostic


def barycenter(u: GridFunction):
    """Circular L^2 barycenter per axis."""
    mass = np.abs(u.values) ** 2
    out = []
    for x, L in zip(u.grid.mesh(), u.grid.lengths):
        z = np.sum(mass * np.exp(2j * np.pi * x / L))
        out.append((np.angle(z) % (2 * np.pi)) * L / (2 * np.pi))
    return tuple(out)


def spectral_translate(u: GridFunction, shift) -> GridFunction:
    """``u(x - shift)`` for arbitrary real ``shift`` (exact for band-limited data)."""
    freq = frequency_grid(u.grid)
    phase = np.ones(u.grid.dims, dtype=complex)
    for axis, (xi, s) in enumerate(zip(freq.axes, shift)):
        line = np.exp(-1j * xi * s)
        if u.grid.dims[axis] % 2 == 0:
            # the unpaired Nyquist mode keeps a real factor so real data stay real
            line[u.grid.dims[axis] // 2] = line[u.grid.dims[axis] // 2].real
        shape = [1] * u.grid.ndim
        shape[axis] = -1
        phase = phase * line.reshape(shape)
    vals = ifft(fft(u.values) * phase)
    return GridFunction(u.grid, vals.real if u.kind == "real" else vals, u.kind)


def asymmetry(u: GridFunction) -> float:
    """``||u - u_rad|| / ||u||`` after moving the barycenter to the box center."""
    grid = u.grid
    c = barycenter(u)
    centered = spectral_translate(u, [gc - bc for gc, bc in zip(grid.center, c)])
    d = grid.offsets()
    r2 = sum((di / h) ** 2 for di, h in zip(d, grid.spacing))
    if len(set(grid.spacing)) == 1:
        key = np.rint(r2).astype(np.int64).ravel()
    else:
        r2 = sum(di * di for di in d)
        key = np.unique(np.round(r2.ravel(), 9), return_inverse=True)[1]
    vals = centered.values.ravel()
    counts = np.bincount(key)
    sums = np.bincount(key, weights=vals.real)
    rad = (sums / np.maximum(counts, 1))[key]
    den = math.sqrt(float(np.sum(np.abs(vals) ** 2)))
    if den == 0.0:
        raise DomainError("asymmetry of the zero function is undefined")
    return math.sqrt(float(np.sum(np.abs(vals - rad) ** 2))) / den


def symmetry_diagnostic(result: MinimizerResult) -> float:
    if not result.converged:
        raise PreconditionError("symmetry diagnostic needs a converged result", el_residual=result.el_residual)
    return asymmetry(result.u)
