import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fracspace.errors import DomainError, MalformedInputError
from fracspace.grid import (
    GridFunction,
    GridSpec,
    apply_multiplier,
    catalog_function,
    forward_transform,
    frequency_grid,
    gradient,
    integrate as grid_integrate,
    inverse_transform,
)

from .conftest import random_function


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec((4,), (1.0,))
    with pytest.raises(ValueError):
        GridSpec((16,), (0.0,))
    with pytest.raises(ValueError):
        GridSpec((8, 8, 8, 8), (1.0,) * 4)
    g = GridSpec((16, 8), (2.0, 1.0))
    assert g.size == 128 and g.volume == 2.0 and g.cell_volume == pytest.approx(2.0 / 128)


def test_gridfunction_size_mismatch():
    with pytest.raises(MalformedInputError):
        GridFunction(GridSpec((16,), (1.0,)), np.zeros(17))


def test_real_kind_rejects_large_imaginary_part():
    g = GridSpec((16,), (1.0,))
    with pytest.raises(MalformedInputError):
        GridFunction(g, np.ones(16) + 1e-6j, "real")
    f = GridFunction(g, np.ones(16) + 1e-14j, "real")
    assert f.values.dtype == np.float64


def test_values_are_immutable(grid1d, rng):
    f = random_function(grid1d, rng)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_frequency_layout(grid1d):
    fg = frequency_grid(grid1d)
    xi = fg.axes[0]
    assert xi[0] == 0.0
    assert xi[1] == pytest.approx(1.0)
    assert xi[128] == pytest.approx(-128.0)


def test_constant_transform(grid2d):
    c = catalog_function("constant", [2.5], grid2d)
    coeffs = forward_transform(c).values
    assert coeffs.flat[0] == pytest.approx(2.5)
    coeffs = np.array(coeffs)
    coeffs.flat[0] = 0
    assert np.max(np.abs(coeffs)) < 1e-15


def test_pure_mode_transform(grid1d):
    x = grid1d.axes()[0]
    f = GridFunction(grid1d, np.exp(3j * x))
    coeffs = forward_transform(f).values
    assert coeffs[3] == pytest.approx(1.0)
    rest = np.delete(coeffs, 3)
    assert np.max(np.abs(rest)) < 1e-14


@given(st.integers(0, 2**31), st.sampled_from([(64,), (16, 8), (8, 8, 8)]), st.booleans())
def test_round_trip_and_parseval(seed, dims, cplx):
    grid = GridSpec(dims, tuple(1.0 + i for i in range(len(dims))))
    f = random_function(grid, np.random.default_rng(seed), cplx)
    coeffs = forward_transform(f)
    back = inverse_transform(coeffs)
    assert np.max(np.abs(back.values - f.values)) <= 1e-12 * f.max_modulus()
    phys = np.sum(np.abs(f.values) ** 2) * grid.cell_volume
    spec = grid.volume * np.sum(np.abs(coeffs.values) ** 2)
    assert phys == pytest.approx(spec, rel=1e-10)


def test_inverse_transform_auto_kind(grid1d, rng):
    f = random_function(grid1d, rng)
    assert inverse_transform(forward_transform(f)).kind == "real"
    g = random_function(grid1d, rng, True)
    assert inverse_transform(forward_transform(g)).kind == "complex"


def test_catalog_constant_and_sine(grid1d):
    assert np.all(catalog_function("constant", [1.0], grid1d).values == 1.0)
    x = grid1d.axes()[0]
    s = catalog_function("sine_mode", [1], grid1d)
    assert np.allclose(s.values, np.sin(2 * np.pi * x / grid1d.lengths[0]), atol=0, rtol=0)


def test_gaussian_mass_against_quadrature():
    L = 10.0
    grid = GridSpec((128,), (L,))
    sigma = L / 16
    f = catalog_function("gaussian_bump", [sigma], grid)
    ref, _ = integrate.quad(lambda x: math.exp(-((x - L / 2) ** 2) / (2 * sigma**2)), -50, 60, epsabs=1e-14, points=[L / 2])
    assert grid_integrate(f) == pytest.approx(ref, rel=1e-10)


def test_compact_bump_support(grid2d):
    R = 2.0
    f = catalog_function("compact_bump", [R], grid2d)
    d = grid2d.offsets()
    r = np.sqrt(sum(di * di for di in d))
    assert np.all(f.values[r >= R] == 0)
    assert np.all(f.values[r < R * 0.99] > 0)


def test_catalog_errors(grid1d):
    with pytest.raises(DomainError):
        catalog_function("compact_bump", [4.0], grid1d)
    with pytest.raises(DomainError):
        catalog_function("nonsense", [], grid1d)


def test_catalog_is_deterministic(grid2d):
    a = catalog_function("plateau", [3.0, 0.2], grid2d)
    b = catalog_function("plateau", [3.0, 0.2], grid2d)
    assert a.values.tobytes() == b.values.tobytes()


def test_gradient_of_sine(grid1d):
    s = catalog_function("sine_mode", [2], grid1d)
    (ds,) = gradient(s)
    x = grid1d.axes()[0]
    assert np.allclose(ds.values, 2 * np.cos(2 * x), atol=1e-12)


def test_apply_multiplier_keeps_real(grid1d, rng):
    f = random_function(grid1d, rng)
    g = apply_multiplier(f, np.ones(grid1d.dims) * 2.0)
    assert g.kind == "real"
    assert np.allclose(g.values, 2 * f.values, atol=1e-13)


def test_arithmetic_checks_grids(grid1d, grid2d, rng):
    with pytest.raises(MalformedInputError):
        random_function(grid1d, rng) + random_function(grid2d, rng)
