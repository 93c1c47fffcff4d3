import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from projhuber.distribution import (
    PROJ_VAR_FACTOR,
    DistParams,
    depth_moment_ratios,
    k_combined,
    log_k_combined,
    log_pdf,
    mode,
    moments,
    nll_and_grad,
    sample,
)
from projhuber.special import DomainError


def unit_params(**kw):
    base = dict(mu_x=0.0, mu_y=0.0, mu_z=1.0, A=np.eye(2), a=1.0)
    base.update(kw)
    return DistParams(**base)


def quad_split(f, lo, hi, brk):
    """scipy quad on [lo, brk] + [brk, hi]; breakpoints cannot be passed with infinite limits."""
    left, _ = integrate.quad(f, lo, brk, limit=200, epsabs=1e-13, epsrel=1e-12)
    right, _ = integrate.quad(f, brk, hi, limit=200, epsabs=1e-13, epsrel=1e-12)
    return left + right


def depth_normalizer_oracle(a):
    # int_0^inf exp(-a max(t, 1/t)) dt = e^-a/a + a Gamma(-1, a), with Gamma(-1, a) = E2(a)/a
    return math.exp(-a) / a + special.expn(2, a)


# --- parameters --------------------------------------------------------------------


@pytest.mark.parametrize(
    "kw",
    [
        dict(mu_z=0.0),
        dict(mu_z=-1.0),
        dict(a=0.0),
        dict(A=np.array([[1.0, 0.2], [0.3, 1.0]])),
        dict(A=np.array([[1.0, 2.0], [2.0, 1.0]])),
        dict(A=np.eye(3)),
        dict(mu_x=math.inf),
    ],
)
def test_invalid_params_rejected(kw):
    with pytest.raises(DomainError):
        unit_params(**kw)


def test_params_are_immutable():
    p = unit_params()
    with pytest.raises(ValueError):
        p.A[0, 0] = 5.0


# --- normalizers ---------------------------------------------------------------------


def test_k_combined_unit_example():
    k_depth, k_proj, k = k_combined(unit_params())
    assert k_depth == pytest.approx(depth_normalizer_oracle(1.0), rel=1e-13)
    assert k_depth == pytest.approx(0.5163749479473643, rel=1e-12)
    assert k_proj == pytest.approx(2 * math.pi * (1 + math.exp(-0.5)), rel=1e-14)
    assert k_proj == pytest.approx(10.094129836639945, rel=1e-12)
    assert k == k_depth * k_proj
    assert k == pytest.approx(5.212355768968889, rel=1e-12)
    assert log_k_combined(unit_params()) == pytest.approx(math.log(k), rel=1e-14)


def test_k_combined_scaling():
    base = k_combined(unit_params(a=2.3))
    doubled = k_combined(unit_params(a=2.3, mu_z=2.0))
    assert doubled[0] == pytest.approx(2 * base[0], rel=1e-13)
    assert doubled[1] == pytest.approx(4 * base[1], rel=1e-13)
    twice_det = k_combined(unit_params(a=2.3, A=np.diag([2.0, 1.0])))
    assert twice_det[1] == pytest.approx(base[1] / 2, rel=1e-13)


def test_huber_radial_mass_matches_quadrature():
    h = lambda r: 0.5 * r * r if r <= 1 else r - 0.5  # noqa: E731
    mass = quad_split(lambda r: r * math.exp(-h(r)), 0, np.inf, 1.0)
    k_proj = k_combined(unit_params())[1]
    assert k_proj == pytest.approx(2 * math.pi * mass, rel=1e-10)


# --- log_pdf ----------------------------------------------------------------------------


def test_log_pdf_at_mode_unit_example():
    value = log_pdf(np.array([0.0, 0.0, 1.0]), unit_params())
    assert value == pytest.approx(-1.0 - math.log(5.212355768968889), rel=1e-13)
    assert value == pytest.approx(-2.6510319165202962, rel=1e-13)


def test_log_pdf_behind_camera_is_minus_inf():
    p = unit_params(a=3.0)
    assert log_pdf(np.array([0.0, 0.0, -1.0]), p) == -math.inf
    assert log_pdf(np.array([0.1, 0.0, 0.0]), p) == -math.inf
    value, grad = nll_and_grad(np.array([0.0, 0.0, -1.0]), p)
    assert value == math.inf and np.all(np.isnan(grad))


def test_log_pdf_rejects_non_finite():
    with pytest.raises(DomainError):
        log_pdf(np.array([0.0, np.nan, 1.0]), unit_params())


def test_log_pdf_batch_matches_single():
    rng = np.random.default_rng(0)
    p = unit_params(mu_x=0.2, mu_z=2.0, A=np.array([[3.0, 0.5], [0.5, 1.0]]), a=4.0)
    pts = sample(p, 20, 1)
    batch = log_pdf(pts, p)
    np.testing.assert_allclose(batch, [log_pdf(v, p) for v in pts], rtol=1e-15)
    assert batch.shape == (20,)
    grid = rng.normal(size=(4, 5, 3)) + [0, 0, 3]
    assert log_pdf(grid, p).shape == (4, 5)


@settings(max_examples=50)
@given(
    st.floats(-1, 1),
    st.floats(-1, 1),
    st.floats(0.1, 5),
    st.floats(-0.5, 0.5),
    st.floats(-2, 2),
    st.floats(0.05, 5),
)
def test_shear_equivariance(x, y, z, delta, mu_x, a):
    p = unit_params(mu_x=mu_x, a=a, A=np.array([[2.0, 0.3], [0.3, 1.0]]))
    shifted = unit_params(mu_x=mu_x - delta, a=a, A=p.A)
    lhs = log_pdf(np.array([x + delta * z, y, z]), p)
    rhs = log_pdf(np.array([x, y, z]), shifted)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@settings(max_examples=40)
@given(st.floats(0.1, 10), st.floats(0.3, 20), st.integers(0, 2**32 - 1))
def test_mode_is_local_maximum(mu_z, a, seed):
    p = unit_params(mu_x=0.1, mu_y=-0.3, mu_z=mu_z, a=a, A=np.array([[5.0, 1.0], [1.0, 2.0]]))
    m = mode(p)
    u = np.random.default_rng(seed).normal(size=(100, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    assert np.all(log_pdf(m + 1e-3 * u, p) <= log_pdf(m, p))


def test_mode_formula():
    np.testing.assert_allclose(mode(unit_params(mu_x=0.1, mu_y=-0.2, mu_z=4.0)), [0.4, -0.8, 4.0], rtol=1e-15)
    np.testing.assert_array_equal(mode(unit_params()), [0.0, 0.0, 1.0])


def test_density_decays_far_away():
    p = unit_params(mu_z=2.0, a=1.5, A=np.array([[1.0, 0.4], [0.4, 2.0]]))
    u = np.random.default_rng(3).normal(size=(1000, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    peaks = [np.max(log_pdf(r * p.mu_z * u, p)) for r in (10, 100, 1000)]
    assert peaks[0] > peaks[1] > peaks[2]
    assert peaks[2] < -500


def test_density_vanishes_near_zero_depth():
    for a in (1.0, 3.0):
        p = unit_params(a=a, mu_z=2.0)
        pts = np.array([[0.0, 0.0, 1e-8 * p.mu_z], [1e-9, -1e-9, 1e-8 * p.mu_z]])
        assert np.all(log_pdf(pts, p) < math.log(1e-30))


def test_density_positive_in_front():
    # Far from the mode exp() underflows, so positivity is checked on the log scale.
    p = unit_params(a=2.0)
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(1000, 3)) * [3, 3, 1]
    pts[:, 2] = np.abs(pts[:, 2]) + 1e-3
    assert np.all(np.isfinite(log_pdf(pts, p)))
    near = sample(p, 1000, 5)
    assert np.all(np.exp(log_pdf(near, p)) > 0)


def test_nll_gradient_central_difference():
    p = unit_params(mu_x=0.3, mu_z=2.5, a=3.0, A=np.array([[4.0, 1.0], [1.0, 2.0]]))
    v = np.array([0.9, -0.4, 2.0])
    _, g = nll_and_grad(v, p)
    h = 1e-6
    fd = [(nll_and_grad(v + h * e, p)[0] - nll_and_grad(v - h * e, p)[0]) / (2 * h) for e in np.eye(3)]
    np.testing.assert_allclose(g, fd, rtol=1e-7)


# --- moments --------------------------------------------------------------------------------


def test_projected_variance_factor_from_quadrature():
    h = lambda r: 0.5 * r * r if r <= 1 else r - 0.5  # noqa: E731
    m1 = quad_split(lambda r: r * math.exp(-h(r)), 0, np.inf, 1.0)
    m3 = quad_split(lambda r: r**3 * math.exp(-h(r)), 0, np.inf, 1.0)
    # Per-axis variance of the whitened offset is E[r^2] / 2.
    assert PROJ_VAR_FACTOR == pytest.approx(m3 / m1 / 2, rel=1e-10)
    np.testing.assert_allclose(moments(unit_params()).var_proj, PROJ_VAR_FACTOR * np.eye(2), rtol=1e-15)


def test_depth_moments_against_quadrature():
    for a in (0.5, 2.0, 10.0):
        w = lambda t: math.exp(-a * max(t, 1 / t))  # noqa: E731
        z0 = quad_split(w, 0, np.inf, 1.0)
        z1 = quad_split(lambda t: t * w(t), 0, np.inf, 1.0)
        z2 = quad_split(lambda t: t * t * w(t), 0, np.inf, 1.0)
        m1, m2 = depth_moment_ratios(a)
        assert m1 == pytest.approx(z1 / z0, rel=1e-9)
        assert m2 == pytest.approx(z2 / z0, rel=1e-9)


def test_depth_moment_examples():
    m = moments(unit_params(a=10.0))
    assert 1.0 < m.mean_depth < 1.7
    assert 0.005 < m.var_depth < 0.02


def test_mean_depth_bound_on_grid():
    for a in np.linspace(1.0 + 1e-9, 50.0, 500):
        ratio = depth_moment_ratios(a)[0]
        assert 1.0 < ratio < 1.7


# --- sampling -----------------------------------------------------------------------------------


def test_sample_deterministic_and_in_front():
    p = unit_params(mu_x=0.3, mu_y=-0.1, a=0.7, mu_z=3.0)
    s1, s2 = sample(p, 5000, 42), sample(p, 5000, 42)
    np.testing.assert_array_equal(s1, s2)
    assert s1.shape == (5000, 3)
    assert np.all(s1[:, 2] > 0)
    assert not np.array_equal(s1, sample(p, 5000, 43))


def test_sample_edge_counts():
    assert sample(unit_params(), 0, 1).shape == (0, 3)
    with pytest.raises(DomainError):
        sample(unit_params(), -1, 1)


def test_sample_projected_mean_large_n():
    p = unit_params(mu_x=0.3, mu_y=-0.1, a=2.0, A=np.array([[2.0, 0.5], [0.5, 1.0]]))
    n = 10**6
    pts = sample(p, n, 11)
    proj = pts[:, :2] / pts[:, 2:]
    se = np.sqrt(np.diag(moments(p).var_proj) / n)
    assert np.all(np.abs(proj.mean(axis=0) - p.mu_p) <= 3 * se)


def test_depth_samples_follow_cdf():
    """Kolmogorov distance between sampled log-depth and the integrated density."""
    a = 1.7
    p = unit_params(a=a)
    s = np.sort(np.log(sample(p, 200_000, 9)[:, 2]))
    density = lambda u: math.exp(u - a * math.exp(abs(u)))  # noqa: E731
    # Tails beyond |u| = 6 carry less than exp(-600) of the mass.
    total = quad_split(density, -6.0, 6.0, 0.0)
    probes = np.quantile(s, [0.05, 0.2, 0.4, 0.5, 0.6, 0.8, 0.95])
    for q in probes:
        cdf = quad_split(density, -6.0, q, min(q, 0.0))
        empirical = np.searchsorted(s, q, side="right") / len(s)
        assert abs(cdf / total - empirical) < 0.005
