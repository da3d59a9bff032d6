import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fracspace.errors import ConfigurationError, DomainError, PreconditionError, TruncationError, UnsupportedOperatorError
from fracspace.grid import GridFunction, GridSpec, catalog_function
from fracspace.interp import (
    CoupleSpec,
    DiagonalOperator,
    KCurve,
    QuadratureConfig,
    SplittingCouple,
    check_operator_bound,
    complex_diag_norm,
    couple_from_label,
    exponent_book,
    k2_diagonal,
    k_splitting_upper,
    monotonicity_constant,
    real_interp,
    real_interp_norm,
)
from fracspace.mollify import MollifierSpec
from fracspace.norms import INF, interp_constant, lp_norm, sobolev_norm_spectral
from fracspace.experiments import random_suite

from .conftest import random_function

T_NODES = np.geomspace(1e-4, 1e4, 81)


def _profile_integral(theta, q):
    # (int_0^inf (u^-theta u / sqrt(1+u^2))^q du/u)^(1/q)
    lo = lambda s: (math.exp(s * (1 - theta)) / math.sqrt(1 + math.exp(2 * s))) ** q
    hi = lambda s: (math.exp(-s * theta) / math.sqrt(1 + math.exp(-2 * s))) ** q
    val = integrate.quad(lo, -np.inf, 0, epsabs=0, epsrel=1e-13)[0] + integrate.quad(hi, 0, np.inf, epsabs=0, epsrel=1e-13)[0]
    return val ** (1 / q)


def test_couple_from_label():
    assert couple_from_label("L2_H1").params == (0.0, 1.0)
    assert couple_from_label("L2_Hs", s=0.5).params == (0.0, 0.5)
    assert couple_from_label("Hs0_Hs1", s0=0.2, s1=0.9).params == (0.2, 0.9)
    assert isinstance(couple_from_label("Lp_W1p", p=3), SplittingCouple)
    with pytest.raises(ConfigurationError):
        couple_from_label("Lp_Lq")


def test_splitting_couple_preconditions():
    with pytest.raises(PreconditionError):
        SplittingCouple(1.0, 1.0, 2)
    with pytest.raises(PreconditionError):
        SplittingCouple(0.0, 1.0, 1.0)


def test_k2_same_space_closed_form(grid1d, rng):
    f = random_function(grid1d, rng)
    c = CoupleSpec.same_space(0.7)
    n = c.norm0(f)
    curve = k2_diagonal(f, c, T_NODES)
    assert np.allclose(curve.K_values, n * T_NODES / np.sqrt(1 + T_NODES**2), rtol=1e-12, atol=0)
    assert curve.kind == "exact_K2"


def test_k2_single_mode(grid1d):
    x = grid1d.axes()[0]
    f = GridFunction(grid1d, np.exp(3j * x))
    r = math.sqrt(10.0)
    curve = k2_diagonal(f, CoupleSpec.l2_hs(1.0), T_NODES)
    expect = math.sqrt(2 * math.pi) * T_NODES * r / np.sqrt(1 + (T_NODES * r) ** 2)
    assert np.allclose(curve.K_values, expect, rtol=1e-12, atol=0)


def test_k2_below_endpoint_norms(grid2d, rng):
    c = CoupleSpec.hs0_hs1(0.3, 1.2)
    for _ in range(10):
        f = random_function(grid2d, rng)
        k = k2_diagonal(f, c, T_NODES).K_values
        assert np.all(k <= np.minimum(c.norm0(f), T_NODES * c.norm1(f)) * (1 + 1e-12))


def test_k2_shape(grid1d):
    for f in random_suite(grid1d, 30, 3):
        assert k2_diagonal(f, CoupleSpec.l2_hs(1.0), T_NODES).shape_violations() == 0


def test_shape_violations_detects_decrease():
    t = np.array([1.0, 2.0, 3.0])
    assert KCurve(t, np.array([1.0, 0.5, 0.6]), "x").shape_violations() >= 1
    assert KCurve(t, np.array([1.0, 3.0, 3.0]), "x").shape_violations() >= 1
    assert KCurve(t, np.array([1.0, 1.5, 1.5]), "x").shape_violations() == 0


def test_k_rejects_bad_nodes(grid1d, rng):
    with pytest.raises(DomainError):
        k2_diagonal(random_function(grid1d, rng), CoupleSpec.l2_hs(1), [1.0, -1.0])


def test_splitting_of_zero(grid1d):
    zero = catalog_function("constant", [0.0], grid1d)
    assert np.all(k_splitting_upper(zero, "Lp_W1p", T_NODES).K_values == 0)


def test_splitting_of_constant(grid1d):
    c = catalog_function("constant", [2.0], grid1d)
    couple = SplittingCouple(0.0, 1.0, 3.0)
    curve = k_splitting_upper(c, couple, T_NODES)
    expect = np.minimum(couple.norm0(c), T_NODES * couple.norm1(c))
    assert np.allclose(curve.K_values, expect, rtol=1e-12, atol=1e-14)


def test_splitting_dominates_k2(grid1d):
    for f in random_suite(grid1d, 8, 11):
        up = k_splitting_upper(f, SplittingCouple(0.0, 1.0, 2.0), T_NODES).K_values
        k2 = k2_diagonal(f, CoupleSpec.l2_hs(1.0), T_NODES).K_values
        assert np.all(up >= k2 * (1 - 1e-12))


def test_splitting_needs_splitting_couple(grid1d, rng):
    with pytest.raises(PreconditionError):
        k_splitting_upper(random_function(grid1d, rng), CoupleSpec.l2_hs(1), T_NODES)
    with pytest.raises(PreconditionError):
        k2_diagonal(random_function(grid1d, rng), SplittingCouple(0, 1, 2), T_NODES)


@pytest.mark.parametrize("theta,q", [(0.5, 2), (0.3, 1), (0.7, 4), (0.5, 1.5)])
def test_real_norm_same_space(grid1d, rng, theta, q):
    f = random_function(grid1d, rng)
    c = CoupleSpec.same_space()
    res = real_interp(f, c, theta, q)
    assert res.value == pytest.approx(c.norm0(f) * _profile_integral(theta, q), rel=1e-6)
    assert res.truncation < 0.01


def test_real_norm_single_mode_scales_like_complex(grid1d):
    x = grid1d.axes()[0]
    theta, q = 0.4, 2
    for k in (0, 2, 7):
        f = GridFunction(grid1d, np.exp(1j * k * x))
        real = real_interp_norm(f, CoupleSpec.l2_hs(1.0), theta, q)
        comp = complex_diag_norm(f, CoupleSpec.l2_hs(1.0), theta)
        assert real / comp == pytest.approx(_profile_integral(theta, q), rel=1e-8)


def test_real_norm_sup(grid1d, rng):
    f = random_function(grid1d, rng)
    theta = 0.35
    t = math.sqrt((1 - theta) / theta)
    peak = t ** (1 - theta) / math.sqrt(1 + t * t)
    c = CoupleSpec.same_space()
    assert real_interp_norm(f, c, theta, INF) == pytest.approx(c.norm0(f) * peak, rel=1e-10)


def test_real_norm_constant_c_theta_q(grid1d, rng):
    # c_{theta,q} is the (theta, q) norm of min(1, t)
    k = lambda t: np.minimum(1.0, t)
    for theta, q in ((0.5, 2), (0.25, 1), (0.8, 3)):
        v = real_interp_norm(None, None, theta, q, k=k)
        # the kink at t = 1 limits the midpoint rule to O(h^2)
        assert v == pytest.approx(interp_constant(theta, q), rel=1e-3)


def test_real_norm_of_zero(grid1d):
    zero = catalog_function("constant", [0.0], grid1d)
    assert real_interp_norm(zero, CoupleSpec.l2_hs(1.0), 0.5, 2) == 0.0


def test_real_norm_domain(grid1d, rng):
    f = random_function(grid1d, rng)
    with pytest.raises(DomainError):
        real_interp(f, CoupleSpec.l2_hs(1), 1.0, 2)
    with pytest.raises(DomainError):
        real_interp(f, CoupleSpec.l2_hs(1), 0.5, 0.5)
    with pytest.raises(ConfigurationError):
        QuadratureConfig(nodes=1)


def test_truncation_reported(grid1d, rng):
    f = random_function(grid1d, rng)
    narrow = QuadratureConfig(nodes=40, t_min=1e-1, t_max=1e1)
    with pytest.raises(TruncationError):
        real_interp(f, CoupleSpec.l2_hs(4.0), 0.5, 2, narrow, strict=True)
    with pytest.warns(RuntimeWarning):
        res = real_interp(f, CoupleSpec.l2_hs(4.0), 0.5, 2, narrow)
    assert res.truncation > 0.01


def test_real_norm_homogeneous(grid1d, rng):
    f = random_function(grid1d, rng)
    c = CoupleSpec.l2_hs(1.0)
    assert real_interp_norm(f * 3.0, c, 0.5, 2) == pytest.approx(3 * real_interp_norm(f, c, 0.5, 2), rel=1e-12)


def test_complex_endpoints_and_hs(grid2d, rng):
    f = random_function(grid2d, rng)
    c = CoupleSpec.hs0_hs1(0.0, 2.0)
    assert complex_diag_norm(f, c, 0.0) == pytest.approx(lp_norm(f, 2), rel=1e-12)
    assert complex_diag_norm(f, c, 1.0) == pytest.approx(sobolev_norm_spectral(f, 2.0), rel=1e-12)
    assert complex_diag_norm(f, c, 0.3) == pytest.approx(sobolev_norm_spectral(f, 0.6), rel=1e-12)
    with pytest.raises(DomainError):
        complex_diag_norm(f, c, 1.5)


@given(st.integers(0, 2**31), st.floats(0, 1), st.floats(0, 1.5), st.floats(1.6, 3))
def test_complex_log_convex(seed, theta, s0, s1):
    g = GridSpec((64,), (4.0,))
    f = random_function(g, np.random.default_rng(seed))
    c = CoupleSpec.hs0_hs1(s0, s1)
    mid = complex_diag_norm(f, c, theta)
    assert mid <= c.norm0(f) ** (1 - theta) * c.norm1(f) ** theta * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 0.9), st.sampled_from([1.0, 1.5, 2.0]), st.sampled_from([2.0, 4.0, INF]))
def test_monotone_in_q(seed, theta, q0, q1):
    g = GridSpec((64,), (4.0,))
    f = random_function(g, np.random.default_rng(seed))
    c = CoupleSpec.l2_hs(1.0)
    lo = real_interp_norm(f, c, theta, q0)
    hi = real_interp_norm(f, c, theta, q1)
    assert hi <= monotonicity_constant(theta, q0, q1) * lo * (1 + 1e-6)


def test_monotonicity_constant_values():
    assert monotonicity_constant(0.5, 2, 2) == 1.0
    assert monotonicity_constant(0.5, 1, INF) == pytest.approx(1 / interp_constant(0.5, 1))
    with pytest.raises(DomainError):
        monotonicity_constant(0.5, 3, 2)


@pytest.mark.parametrize(
    "op,src,tgt",
    [
        (DiagonalOperator.identity(), CoupleSpec.l2_hs(1.0), CoupleSpec.l2_hs(1.0)),
        (DiagonalOperator.bessel(-0.5), CoupleSpec.hs0_hs1(0, 1), CoupleSpec.hs0_hs1(0.5, 1.5)),
        (MollifierSpec(0.2), CoupleSpec.l2_hs(1.0), CoupleSpec.l2_hs(1.0)),
    ],
)
@pytest.mark.parametrize("method", ["real", "complex"])
def test_operator_bound_holds(grid1d, op, src, tgt, method):
    suite = random_suite(grid1d, 100 if method == "complex" else 20, 5)
    rep = check_operator_bound(op, src, tgt, 0.5, 2, suite, method=method)
    assert rep.holds and rep.worst_ratio <= rep.bound * (1 + 1e-6)
    assert rep.n_tested == len(suite)


def test_operator_bound_endpoint_norms(grid1d):
    rep = check_operator_bound(DiagonalOperator.bessel(-0.5), CoupleSpec.hs0_hs1(0, 1), CoupleSpec.hs0_hs1(0.5, 1.5), 0.5, 2, random_suite(grid1d, 3, 1), method="complex")
    assert rep.endpoint_norms == pytest.approx((1.0, 1.0), rel=1e-14)


def test_operator_bound_errors(grid1d):
    suite = random_suite(grid1d, 2, 1)
    with pytest.raises(PreconditionError):
        check_operator_bound(DiagonalOperator.identity(), CoupleSpec.l2_hs(1), CoupleSpec.l2_hs(1), 0.5, 2, [])
    with pytest.raises(UnsupportedOperatorError):
        check_operator_bound(DiagonalOperator.identity(), SplittingCouple(0, 1, 2), CoupleSpec.l2_hs(1), 0.5, 2, suite)
    with pytest.raises(UnsupportedOperatorError):
        check_operator_bound(lambda u: u, CoupleSpec.l2_hs(1), CoupleSpec.l2_hs(1), 0.5, 2, suite)


def test_exponent_book():
    book = exponent_book(2, INF, 0.5)
    assert book.p == pytest.approx(4.0)
    assert book.c_theta_p == pytest.approx(interp_constant(0.5, 4.0))
    assert exponent_book(1, 3, 0.5).p == pytest.approx(1.5)
    with pytest.raises(DomainError):
        exponent_book(3, 2, 0.5)
    with pytest.raises(DomainError):
        exponent_book(1, 2, 0.0)
