import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from projhuber.special import (
    DomainError,
    QuadratureConfig,
    adaptive_simpson,
    g1,
    g1_simpson,
    huber,
    log_norm_depth,
    scaled_gamma,
    scaled_gamma_simpson,
    upper_gamma,
)


def gamma_oracle(k, a):
    """Upper incomplete gamma from scipy: E_n(a) = a^(n-1) Gamma(1-n, a)."""
    if k > 0:
        return special.gammaincc(k, a) * special.gamma(k)
    n = 1 - k
    return special.expn(n, a) / a ** (n - 1)


# --- huber -----------------------------------------------------------------------


@pytest.mark.parametrize("r, value, deriv", [(0.0, 0.0, 0.0), (1.0, 0.5, 1.0), (2.5, 2.0, 1.0), (0.4, 0.08, 0.4)])
def test_huber_examples(r, value, deriv):
    h, dh = huber(r)
    assert h == pytest.approx(value, abs=1e-15)
    assert dh == pytest.approx(deriv, abs=1e-15)


def test_huber_rejects_negative():
    with pytest.raises(DomainError):
        huber(-0.1)


@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_huber_convex_and_one_lipschitz(r1, r2):
    h1, h2 = huber(r1)[0], huber(r2)[0]
    hm = huber(0.5 * (r1 + r2))[0]
    assert hm <= 0.5 * (h1 + h2) + 1e-9 * (1 + abs(h1) + abs(h2))
    assert abs(h1 - h2) <= abs(r1 - r2) * (1 + 1e-12) + 1e-12


# --- upper gamma -------------------------------------------------------------------


@pytest.mark.parametrize(
    "k, a, expected",
    [(1, 0.5, math.exp(-0.5)), (2, 1.0, 2 * math.exp(-1)), (-1, 1.0, 0.14849550677592205)],
)
def test_upper_gamma_examples(k, a, expected):
    assert upper_gamma(k, a) == pytest.approx(expected, rel=1e-12)


def test_upper_gamma_minus_one_against_direct_integral():
    ref, _ = integrate.quad(lambda t: t**-2 * math.exp(-t), 1.0, np.inf, epsabs=1e-14, epsrel=1e-13)
    assert upper_gamma(-1, 1.0) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("k", [-3, -2, -1, 1, 2, 3])
@pytest.mark.parametrize("a", [0.05, 0.7, 3.0, 29.9, 30.1, 80.0, 300.0])
def test_upper_gamma_matches_scipy(k, a):
    assert upper_gamma(k, a) == pytest.approx(gamma_oracle(k, a), rel=1e-12)


@pytest.mark.parametrize("k", [-3, -2, -1, 1, 2, 3])
def test_scaled_gamma_continuous_at_recurrence_switch(k):
    # The functions have slope ~1e-3 here, so a 2e-9 gap moves them by ~1e-12.
    lo, hi = scaled_gamma(k, 30.0 - 1e-9), scaled_gamma(k, 30.0 + 1e-9)
    assert abs(lo - hi) < 1e-10


@pytest.mark.parametrize("k, a", [(0, 1.0), (4, 1.0), (-4, 1.0), (1, 0.0), (-1, -2.0)])
def test_upper_gamma_domain(k, a):
    with pytest.raises(DomainError):
        upper_gamma(k, a)


def test_scaled_gamma_closed_forms():
    a = np.array([0.3, 2.0, 17.0])
    np.testing.assert_allclose(scaled_gamma(1, a), 1.0)
    np.testing.assert_allclose(scaled_gamma(2, a), 1 + 1 / a)
    np.testing.assert_allclose(scaled_gamma(3, a), 1 + 2 / a + 2 / a**2)


def test_scaled_gamma_large_a_asymptotics():
    # Gamma(s, a) e^a a^(1-s) ~ sum_n (s-1)(s-2)...(s-n) / a^n
    def series(s, a, terms=6):
        total, coef = 0.0, 1.0
        for n in range(terms):
            total += coef / a**n
            coef *= s - 1 - n
        return total

    for a in (1e3, 1e5):
        for k in (-1, -2, -3):
            assert scaled_gamma(k, a) == pytest.approx(series(k, a), rel=1e-13)


# --- g1 ------------------------------------------------------------------------------


def test_g1_reference_values():
    assert g1(1.0) == pytest.approx(0.4036526376768056, rel=1e-13)
    assert g1(100.0) == pytest.approx(0.9805771326698162, rel=1e-13)
    assert 0.9 < g1(50.0) < 1.0
    assert g1(10.0) > g1(1.0)


def test_g1_vectorized_matches_scalar():
    a = np.geomspace(0.01, 500, 17)
    np.testing.assert_allclose(g1(a), [g1(float(x)) for x in a], rtol=1e-15)


@settings(max_examples=60)
@given(st.floats(1e-3, 1e4), st.floats(1.0001, 3.0))
def test_g1_in_unit_interval_and_increasing(a, factor):
    lo, hi = g1(a), g1(a * factor)
    assert 0.0 < lo < 1.0
    assert lo < hi or hi == pytest.approx(lo, rel=1e-12)


def test_g1_domain():
    with pytest.raises(DomainError):
        g1(0.0)
    with pytest.raises(DomainError):
        g1(np.array([1.0, -1.0]))


def test_quadrature_self_consistency():
    for a in np.geomspace(0.05, 50.0, 50):
        assert abs(g1(a) - g1_simpson(a)) < 1e-9


def test_low_order_rule_is_worse_but_close():
    coarse = QuadratureConfig(node_count=8)
    assert abs(g1(1.0, coarse) - g1_simpson(1.0)) < 1e-3


def test_recurrence_against_direct_quadrature():
    for a in np.geomspace(0.1, 20.0, 30):
        for k in (-2, -3):
            assert scaled_gamma(k, a) == pytest.approx(scaled_gamma_simpson(k, a), rel=1e-8)


def test_adaptive_simpson_on_known_integrals():
    assert adaptive_simpson(math.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-11)
    assert adaptive_simpson(lambda x: math.sqrt(x), 0.0, 1.0, abs_tol=1e-12) == pytest.approx(2 / 3, abs=1e-9)


# --- log normalizer ------------------------------------------------------------------


def test_log_norm_depth_value():
    value, _ = log_norm_depth(1.0)
    assert value == pytest.approx(-1.0 + math.log1p(0.4036526376768056), rel=1e-13)
    assert value == pytest.approx(-0.6609221340691559, rel=1e-13)


def test_log_norm_depth_equals_direct_formula():
    for a in (0.2, 1.0, 4.0, 25.0):
        direct = math.log(math.exp(-a) / a + gamma_oracle(-1, a) * a)
        assert log_norm_depth(a)[0] == pytest.approx(direct, rel=1e-12)


def test_log_norm_depth_bounds_at_three():
    a = 3.0
    value, _ = log_norm_depth(a)
    assert -a - math.log(a) <= value <= -a + math.log(1 / a + 1)


@settings(max_examples=80)
@given(st.floats(0.01, 200.0))
def test_depth_normalizer_bracketed(a):
    k = math.exp(log_norm_depth(a)[0])
    assert math.exp(-a) / a <= k * (1 + 1e-12)
    assert k <= math.exp(-a) * (1 / a + 1) * (1 + 1e-12)


@pytest.mark.parametrize("a", [0.05, 0.5, 2.0, 9.0, 60.0])
def test_log_norm_depth_derivative_vs_finite_difference(a):
    h = 1e-5 * a
    fd = (log_norm_depth(a + h)[0] - log_norm_depth(a - h)[0]) / (2 * h)
    assert log_norm_depth(a)[1] == pytest.approx(fd, rel=1e-6)


def test_log_norm_depth_derivative_bounded_above_one():
    a = np.geomspace(1.0 + 1e-12, 1e4, 50_000)
    assert np.all(np.abs(log_norm_depth(a)[1]) <= 4.0)
