import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fracspace.errors import DomainError, PreconditionError
from fracspace.grid import GridFunction, GridSpec, apply_multiplier, catalog_function, frequency_grid
from fracspace.norms import (
    INF,
    ExponentBook,
    as_exponent,
    besov_norm,
    bessel_multiplier,
    bessel_potential,
    critical_exponent,
    holder_theta,
    interp_constant,
    lp_norm,
    norm_by_name,
    sobolev_norm,
    sobolev_norm_spectral,
)
from fracspace.experiments import random_suite

from .conftest import random_function


def test_as_exponent():
    assert as_exponent("inf") == INF and as_exponent("Infinity") == INF and as_exponent(3) == 3.0
    with pytest.raises(DomainError):
        as_exponent(float("nan"))


def test_critical_exponent():
    assert critical_exponent(2, 1, 3) == 6
    assert critical_exponent(2, 0.5, 1) == INF
    assert critical_exponent(2, 0.6, 1) == INF
    assert critical_exponent(2, 0.25, 1) == pytest.approx(4.0)


def test_holder_theta_and_constants():
    assert holder_theta(2, 3, 6) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        holder_theta(2, 2, 6)
    assert interp_constant(0.5, 2) == pytest.approx(math.sqrt(2))
    assert interp_constant(0.3, INF) == 1.0
    assert interp_constant(0.25, 1) == pytest.approx(1 / (0.25 * 0.75))
    book = ExponentBook(2.0, 6.0, 0.5, 3.0, interp_constant(0.5, 3))
    assert book.holder() == pytest.approx(0.5)


def test_lp_norm_of_constant():
    g = GridSpec((32, 16), (2.0, 3.0))
    one = catalog_function("constant", [1.0], g)
    for p in (1, 1.5, 2, 7):
        assert lp_norm(one, p) == pytest.approx(6.0 ** (1 / p), rel=1e-14)
    assert lp_norm(one, INF) == 1.0
    assert lp_norm(one * 0.0, 3) == 0.0


def test_lp_norm_rejects_small_p(grid1d, rng):
    with pytest.raises(DomainError):
        lp_norm(random_function(grid1d, rng), 0.5)


def test_lp_norm_of_gaussian_against_quadrature():
    L = 12.0
    g = GridSpec((256,), (L,))
    s = 0.9
    f = catalog_function("gaussian_bump", [s], g)
    ref = math.sqrt(integrate.quad(lambda x: math.exp(-((x - L / 2) ** 2) / s**2), -40, 50, points=[L / 2], epsabs=1e-15)[0])
    assert lp_norm(f, 2) == pytest.approx(ref, rel=1e-10)


@given(st.integers(0, 2**31), st.floats(1, 8), st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3))
def test_lp_norm_homogeneous_and_triangle(seed, p, lam):
    rng = np.random.default_rng(seed)
    g = GridSpec((64,), (1.0,))
    f, h = random_function(g, rng), random_function(g, rng)
    assert lp_norm(f * lam, p) == pytest.approx(abs(lam) * lp_norm(f, p), rel=1e-12)
    assert lp_norm(f + h, p) <= (lp_norm(f, p) + lp_norm(h, p)) * (1 + 1e-12)


@given(st.integers(0, 2**31), st.floats(1, 4), st.floats(0.05, 0.95), st.one_of(st.floats(4.5, 20), st.just(INF)))
def test_holder_inequality(seed, p0, theta, p1):
    g = GridSpec((128,), (3.0,))
    f = random_function(g, np.random.default_rng(seed))
    p = 1 / ((1 - theta) / p0 + theta / p1)
    assert lp_norm(f, p) <= lp_norm(f, p0) ** (1 - theta) * lp_norm(f, p1) ** theta * (1 + 1e-12)


def test_bessel_potential_identity_and_inverse(grid1d, rng):
    f = random_function(grid1d, rng)
    assert bessel_potential(f, 0) is f
    back = bessel_potential(bessel_potential(f, 1.3), -1.3)
    assert np.max(np.abs(back.values - f.values)) <= 1e-11 * f.max_modulus()


def test_bessel_potential_on_pure_mode(grid1d):
    x = grid1d.axes()[0]
    f = GridFunction(grid1d, np.exp(5j * x))
    g = bessel_potential(f, 0.7)
    assert np.allclose(g.values, 26**0.35 * f.values, rtol=1e-13, atol=0)


def test_bessel_multiplier_composition(grid2d):
    m = bessel_multiplier(grid2d, 0.4) * bessel_multiplier(grid2d, 1.1)
    assert np.allclose(m, bessel_multiplier(grid2d, 1.5), rtol=1e-14, atol=0)


def test_sobolev_norm_of_constant():
    g = GridSpec((32,), (5.0,))
    c = catalog_function("constant", [-3.0], g)
    assert sobolev_norm(c, 1.7, 3) == pytest.approx(3 * 5 ** (1 / 3), rel=1e-13)


def test_sobolev_norm_of_pure_mode(grid1d):
    x = grid1d.axes()[0]
    f = GridFunction(grid1d, np.exp(4j * x))
    expect = 17 ** (0.6 / 2) * math.sqrt(2 * math.pi)
    assert sobolev_norm(f, 0.6, 2) == pytest.approx(expect, rel=1e-13)
    assert sobolev_norm_spectral(f, 0.6) == pytest.approx(expect, rel=1e-13)


def test_sobolev_two_routes_agree(grid2d, rng):
    for _ in range(20):
        f = random_function(grid2d, rng)
        a = rng.uniform(0, 3)
        assert sobolev_norm(f, a, 2) == pytest.approx(sobolev_norm_spectral(f, a), rel=1e-12)


def test_sobolev_domain_errors(grid1d, rng):
    f = random_function(grid1d, rng)
    with pytest.raises(DomainError):
        sobolev_norm(f, -0.5, 2)
    with pytest.raises(DomainError):
        sobolev_norm(f, 1, 1)
    with pytest.raises(DomainError):
        sobolev_norm(f, 1, INF)


@given(st.integers(0, 2**31), st.floats(0, 2), st.floats(0, 2))
def test_sobolev_monotone_in_alpha(seed, a1, a2):
    g = GridSpec((64,), (2.0,))
    f = random_function(g, np.random.default_rng(seed))
    lo, hi = sorted((a1, a2))
    assert sobolev_norm(f, lo, 2) <= sobolev_norm(f, hi, 2) * (1 + 1e-12)


def test_besov_zero_and_homogeneity(grid1d, rng):
    zero = catalog_function("constant", [0.0], grid1d)
    assert besov_norm(zero, 0.5, 2, 2) == 0.0
    f = catalog_function("gaussian_bump", [0.3], grid1d)
    assert besov_norm(f * -2.5, 0.5, 2, 2) == pytest.approx(2.5 * besov_norm(f, 0.5, 2, 2), rel=1e-12)


def test_besov_domain_errors(grid1d):
    f = catalog_function("gaussian_bump", [0.3], grid1d)
    with pytest.raises(DomainError):
        besov_norm(f, 0.0, 2, 2)
    with pytest.raises(DomainError):
        besov_norm(f, 0.5, 1, 2)
    with pytest.raises(DomainError):
        besov_norm(f, 0.5, 2, 0.5)


@pytest.mark.slow
def test_besov_bracket_against_hs(grid1d):
    # frozen regression band measured on this suite: ratios in [1.42, 1.71]
    ratios = [besov_norm(f, 0.5, 2, 2) / sobolev_norm(f, 0.5, 2) for f in random_suite(grid1d, 200, 99)]
    assert 1 / 4 <= min(ratios) and max(ratios) <= 4
    assert 1.35 <= min(ratios) and max(ratios) <= 1.8


def test_besov_other_exponents(grid1d):
    f = catalog_function("gaussian_bump", [0.4], grid1d)
    for p, q in ((1.5, 1), (3, 2), (2, INF)):
        v = besov_norm(f, 0.5, p, q)
        assert np.isfinite(v) and v > 0


def test_norm_by_name(grid1d):
    f = catalog_function("sine_mode", [1], grid1d)
    assert norm_by_name(f, "lp", p=2) == pytest.approx(math.sqrt(math.pi))
    assert norm_by_name(f, "hs_spectral", alpha=1.0) == pytest.approx(math.sqrt(2 * math.pi))
    with pytest.raises(PreconditionError):
        norm_by_name(f, "bmo")
