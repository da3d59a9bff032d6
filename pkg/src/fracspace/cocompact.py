"""Lattice shifts, vanishing and multi-profile sequences, profile extraction.

A lattice unit is a block of ``block`` grid cells along every axis, so every
shift is an exact cyclic index shift and no interpolation is involved.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import signal

from .errors import ConfigurationError, DomainError, GenerationError, PreconditionError
from .gfn import atomic_write_bytes, read_gfn, write_gfn
from .grid import GridFunction, GridSpec, catalog_function
from .norms import INF, as_exponent, besov_norm, critical_exponent, lp_norm, sobolev_norm

MASS_TAIL = 1e-12


@dataclass(frozen=True)
class LatticeShift:
    y: tuple
    block: int = 1

    def __post_init__(self):
        ys = tuple(self.y) if np.ndim(self.y) else (self.y,)
        for v in ys:
            if float(v) != int(v):
                raise DomainError("lattice shifts must be integer", y=list(map(float, ys)))
        if int(self.block) < 1:
            raise DomainError("block must be a positive integer", block=self.block)
        object.__setattr__(self, "y", tuple(int(v) for v in ys))

    def __add__(self, other):
        if self.block != other.block:
            raise DomainError("cannot compose shifts with different blocks")
        return LatticeShift(tuple(a + b for a, b in zip(self.y, other.y)), self.block)

    def __neg__(self):
        return LatticeShift(tuple(-v for v in self.y), self.block)

    def cells(self):
        return tuple(v * self.block for v in self.y)


def _as_shift(y):
    return y if isinstance(y, LatticeShift) else LatticeShift(y)


def lattice_shift(u: GridFunction, y) -> GridFunction:
    """``(g_y u)(x) = u(x - y)`` as a cyclic roll by ``y * block`` cells."""
    y = _as_shift(y)
    if len(y.y) != u.grid.ndim:
        raise DomainError("shift needs one component per axis", y=list(y.y))
    return GridFunction(u.grid, np.roll(u.values, y.cells(), axis=tuple(range(u.grid.ndim))), u.kind)


# ----------------------------------------------------------------------------
# sequences


def effective_radius(w: GridFunction, center=None, tail=MASS_TAIL):
    """Smallest radius around ``center`` outside which at most ``tail`` of the L^2 mass lies."""
    r = np.sqrt(sum(d * d for d in w.grid.offsets(center))).ravel()
    mass = np.abs(w.flat) ** 2
    total = mass.sum()
    if total == 0:
        return 0.0
    order = np.argsort(r)[::-1]
    outside = np.cumsum(mass[order])
    # walk inward from the farthest sample while the outside mass stays below tail
    k = int(np.searchsorted(outside, tail * total, side="right"))
    return float(r[order][k]) if k < r.size else 0.0


def dilate(w: GridFunction, k: int, center=None) -> GridFunction:
    """``x -> w(c + (x - c)/k)`` for integer ``k`` by spectral zero-padding."""
    k = int(k)
    grid = w.grid
    center = grid.center if center is None else center
    vals = w.values
    if k == 1:
        return w
    for axis, (n, L, c) in enumerate(zip(grid.dims, grid.lengths, center)):
        fine = signal.resample(vals, n * k, axis=axis)
        offset = (k - 1) * c / (L / n)
        j0 = int(round(offset))
        if abs(offset - j0) > 1e-9:
            raise GenerationError("dilation center must lie on the fine grid", center=list(center))
        idx = (np.arange(n) + j0) % (n * k)
        vals = np.take(fine, idx, axis=axis)
    return GridFunction(grid, vals, w.kind)


@dataclass
class SequenceSpec:
    """Canonical sequences ``u_k``.

    ``vanishing``: ``u_k = k^(-N/p) w(c + (x - c)/k)``.
    ``translating_bump``: ``u_k = g_{y_k} w``.
    ``multi_profile``: ``u_k = sum_n g_{y_k^(n)} w^(n)``.
    ``paths`` holds one callable ``k -> integer vector`` per profile.
    """

    kind: str
    profiles: list
    p: float = 2.0
    paths: list = field(default_factory=list)
    block: int = 1

    def __post_init__(self):
        if self.kind not in ("translating_bump", "vanishing", "multi_profile"):
            raise ConfigurationError(f"unknown sequence kind {self.kind!r}")
        if not self.profiles:
            raise ConfigurationError("at least one profile required")
        if self.kind != "vanishing" and len(self.paths) != len(self.profiles):
            raise ConfigurationError("one shift path per profile required")

    @classmethod
    def vanishing(cls, w, p):
        return cls("vanishing", [w], as_exponent(p))

    @classmethod
    def translating(cls, w, path: Callable, block=1):
        return cls("translating_bump", [w], 2.0, [path], block)

    @classmethod
    def multi_profile(cls, ws, paths, block=1):
        return cls("multi_profile", list(ws), 2.0, list(paths), block)

    def shifts(self, k):
        return [LatticeShift(path(k), self.block) for path in self.paths]

    def min_separation(self, k):
        """Smallest pairwise minimum-image distance (in grid cells) between shifts at ``k``."""
        grid = self.profiles[0].grid
        cells = [np.array(s.cells()) for s in self.shifts(k)]
        best = math.inf
        for i in range(len(cells)):
            for j in range(i + 1, len(cells)):
                d = np.mod(cells[i] - cells[j] + np.array(grid.dims) // 2, grid.dims) - np.array(grid.dims) // 2
                best = min(best, float(np.sqrt(np.sum(d * d))))
        return best


def vanishing_demo_spec(p=2.0, dim=1):
    """Gaussian of width 1 on a box of length 512 with 2048 points per axis."""
    grid = GridSpec((2048,) * dim, (512.0,) * dim)
    return SequenceSpec.vanishing(catalog_function("gaussian_bump", [1.0], grid), p)


def generate_sequence(spec: SequenceSpec, k: int) -> GridFunction:
    if int(k) != k or k < 1:
        raise DomainError("sequence index must be a positive integer", k=k)
    k = int(k)
    if spec.kind == "vanishing":
        w = spec.profiles[0]
        grid = w.grid
        reach = k * effective_radius(w)
        if any(reach > L / 4 for L in grid.lengths):
            raise GenerationError(
                "dilated support leaves the box convention", k=k, reach=reach, limit=min(grid.lengths) / 4
            )
        return dilate(w, k) * (k ** (-grid.ndim / spec.p))
    total = None
    for w, y in zip(spec.profiles, spec.shifts(k)):
        term = lattice_shift(w, y)
        total = term if total is None else total + term
    return total


# ----------------------------------------------------------------------------
# profile extraction


def _cell_view(values, m):
    shape = []
    for n in values.shape:
        shape += [n // m, m]
    return values.reshape(shape)


def cell_norms(u: GridFunction, cell_size: int):
    """L^2 norm of ``u`` on each block of ``cell_size`` cells per axis."""
    nd = u.grid.ndim
    blocks = _cell_view(np.abs(u.values) ** 2, cell_size)
    return np.sqrt(blocks.sum(axis=tuple(range(1, 2 * nd, 2))) * u.grid.cell_volume)


@dataclass
class ProfileDecomposition:
    profiles: list
    shifts: list
    remainder: GridFunction
    bl_residual: float
    reconstruction_error: float
    reference_norm: float
    cell_size: int

    def reconstruct(self):
        total = self.remainder
        for w, y in zip(self.profiles, self.shifts):
            total = total + lattice_shift(w, y)
        return total

    def manifest(self):
        return {
            "cell_size": self.cell_size,
            "shifts": [list(s.y) for s in self.shifts],
            "block": self.cell_size,
            "bl_residual": self.bl_residual,
            "reconstruction_error": self.reconstruction_error,
            "reference_norm": self.reference_norm,
            "profiles": [f"profile_{i:03d}.gfn" for i in range(len(self.profiles))],
            "remainder": "remainder.gfn",
        }

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        man = self.manifest()
        for w, name in zip(self.profiles, man["profiles"]):
            write_gfn(w, os.path.join(directory, name))
        write_gfn(self.remainder, os.path.join(directory, "remainder.gfn"))
        text = json.dumps(man, indent=2, sort_keys=True) + "\n"
        atomic_write_bytes(os.path.join(directory, "manifest.json"), text.encode())

    @classmethod
    def load(cls, directory):
        with open(os.path.join(directory, "manifest.json")) as fh:
            man = json.load(fh)
        profiles = [read_gfn(os.path.join(directory, name)) for name in man["profiles"]]
        shifts = [LatticeShift(tuple(y), man["block"]) for y in man["shifts"]]
        return cls(
            profiles, shifts, read_gfn(os.path.join(directory, man["remainder"])),
            man["bl_residual"], man["reconstruction_error"], man["reference_norm"], man["cell_size"],
        )


def profile_extract(
    u: GridFunction, cell_size: int, eps_stop: float, max_profiles: int = 16, window: int = 2,
    reference_norm=None,
) -> ProfileDecomposition:
    """Greedy profile extraction by local L^2 mass.

    Each step picks the cell of largest L^2 norm, cuts out the cube of
    ``2*window + 1`` cells centred on it, stores that content translated back
    to cell 0 as a profile, and removes it from the remainder. Stops once the
    largest cell norm drops below ``eps_stop * reference_norm`` (default
    ``||u||_2``). Windows are 0/1 masks, so reconstruction is exact.
    """
    if max_profiles < 1:
        raise ConfigurationError("max_profiles must be at least 1", max_profiles=max_profiles)
    if not eps_stop > 0:
        raise ConfigurationError("eps_stop must be positive", eps_stop=eps_stop)
    grid = u.grid
    if cell_size < 1 or any(n % cell_size for n in grid.dims):
        raise ConfigurationError("cell_size must divide every grid dimension", cell_size=cell_size)
    ref = lp_norm(u, 2) if reference_norm is None else float(reference_norm)
    ncells = tuple(n // cell_size for n in grid.dims)
    remainder = np.array(u.values)
    profiles, shifts = [], []
    while len(profiles) < max_profiles:
        norms = cell_norms(GridFunction(grid, remainder, u.kind), cell_size)
        idx = np.unravel_index(int(np.argmax(norms)), norms.shape)
        if norms[idx] < eps_stop * ref or norms[idx] == 0.0:
            break
        mask = np.ones(grid.dims, dtype=bool)
        for axis, (c, nc) in enumerate(zip(idx, ncells)):
            span = np.zeros(nc, dtype=bool)
            span[np.arange(c - window, c + window + 1) % nc] = True
            line = np.repeat(span, cell_size)
            shape = [1] * grid.ndim
            shape[axis] = -1
            mask &= line.reshape(shape)
        content = np.where(mask, remainder, 0)
        remainder = np.where(mask, 0, remainder)
        shift = LatticeShift(tuple(int(i) for i in idx), cell_size)
        profiles.append(lattice_shift(GridFunction(grid, content, u.kind), -shift))
        shifts.append(shift)
    rem = GridFunction(grid, remainder, u.kind)
    dec = ProfileDecomposition(profiles, shifts, rem, 0.0, 0.0, ref, cell_size)
    dec.reconstruction_error = lp_norm(u - dec.reconstruct(), 2)
    if lp_norm(u, 2) > 0:
        dec.bl_residual = brezis_lieb_check(u, profiles, shifts, 2.0)
    return dec


# ----------------------------------------------------------------------------
# Brezis-Lieb


def _sorted_power_integral(values, p, cell_volume):
    # sorting makes the sum independent of sample order, hence exactly shift invariant
    return float(np.sum(np.sort(np.abs(values).ravel() ** p))) * cell_volume


def brezis_lieb_check(u: GridFunction, profiles, shifts, p) -> float:
    """``|int|u|^p - sum int|w_n|^p - int|u - sum g_{y_n} w_n|^p| / int|u|^p``."""
    p = as_exponent(p)
    if not 1 <= p < INF:
        raise DomainError("Brezis-Lieb check needs 1 <= p < inf", p=p)
    if len(profiles) != len(shifts):
        raise PreconditionError("one shift per profile required")
    keys = [_as_shift(s).cells() for s in shifts]
    if len(set(keys)) != len(keys):
        raise PreconditionError("shifts must be distinct")
    dv = u.grid.cell_volume
    total = _sorted_power_integral(u.values, p, dv)
    if total == 0.0:
        raise DomainError("degenerate input: ||u||_p = 0")
    if not profiles:
        return 0.0
    rest = np.array(u.values)
    parts = 0.0
    for w, y in zip(profiles, shifts):
        parts += _sorted_power_integral(w.values, p, dv)
        rest = rest - lattice_shift(w, y).values
    return abs(total - parts - _sorted_power_integral(rest, p, dv)) / total


# ----------------------------------------------------------------------------
# cocompactness demo


def _source_norm(descriptor):
    space = descriptor.get("space")
    p = as_exponent(descriptor.get("p", 2.0))
    if space == "sobolev":
        alpha = float(descriptor.get("alpha", 1.0))
        return alpha, p, None, (lambda f: sobolev_norm(f, alpha, p))
    if space == "besov":
        s = float(descriptor.get("s", descriptor.get("alpha", 0.5)))
        q0 = as_exponent(descriptor.get("q", 2.0))
        return s, p, q0, (lambda f: besov_norm(f, s, p, q0))
    raise PreconditionError(f"unknown source space {space!r}", known=["sobolev", "besov"])


@dataclass
class CocompactnessReport:
    rows: list
    exponent: float
    source_bracket: bool
    monotone: bool
    scaling_error: float
    final_fraction: float
    source: dict
    q: float

    @property
    def scaling_ok(self):
        return self.scaling_error <= 0.10

    @property
    def verdict(self):
        return self.source_bracket and self.monotone and self.scaling_ok

    def to_dict(self):
        return {
            "rows": [dict(zip(("k", "source_norm", "target_norm"), r)) for r in self.rows],
            "decay_exponent": self.exponent,
            "source_bracket": self.source_bracket,
            "monotone": self.monotone,
            "scaling_error": self.scaling_error,
            "final_fraction": self.final_fraction,
            "verdict": self.verdict,
            "source": self.source,
            "q": self.q,
        }


def cocompactness_demo(source: dict, q, spec: SequenceSpec | None = None, k_max=16) -> CocompactnessReport:
    """Track source and L^q norms along a vanishing sequence.

    The source stays bounded (within a factor 2 of ``u_1``) while the L^q
    norm decays like ``k^(-N(1/p - 1/q))``; ``scaling_error`` is the largest
    relative deviation of ``||u_k||_q / ||u_1||_q`` from that law.
    """
    alpha, p, q0, norm = _source_norm(source)
    q = as_exponent(q)
    spec = spec or vanishing_demo_spec(p)
    if spec.kind != "vanishing":
        raise PreconditionError("the demo needs a vanishing sequence", kind=spec.kind)
    if spec.p != p:
        raise PreconditionError("sequence scaling exponent must match the source p", p=p, spec_p=spec.p)
    dim = spec.profiles[0].grid.ndim
    crit = critical_exponent(p, alpha, dim)
    if not p < q:
        raise PreconditionError("need p < q (cocompactness fails at q = p)", p=p, q=q, violated="p < q")
    if not q < crit:
        raise PreconditionError("need q below the critical exponent", q=q, critical=crit, violated="q < p*")
    if q0 is not None and not q0 <= q:
        raise PreconditionError("need q0 <= q for the Besov source", q0=q0, q=q, violated="q0 <= q")
    rows = []
    for k in range(1, int(k_max) + 1):
        u = generate_sequence(spec, k)
        rows.append((k, norm(u), lp_norm(u, q)))
    src = np.array([r[1] for r in rows])
    tgt = np.array([r[2] for r in rows])
    ks = np.array([r[0] for r in rows], dtype=float)
    exponent = dim * (1 / p - 1 / q)
    predicted = ks ** (-exponent)
    scaling_error = float(np.max(np.abs(tgt / tgt[0] / predicted - 1)))
    bracket = bool(np.all((src >= 0.5 * src[0]) & (src <= 2.0 * src[0])))
    monotone = bool(np.all(np.diff(tgt) < 0))
    return CocompactnessReport(
        rows, exponent, bracket, monotone, scaling_error, float(tgt[-1] / tgt[0]), dict(source), q
    )
