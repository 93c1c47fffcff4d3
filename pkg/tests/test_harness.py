import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projhuber.harness import (
    ScenarioConfig,
    calibration_curve,
    fit_params,
    look_at,
    raw_from_params,
    simulate_rig,
    window_bounds,
)
from projhuber.distribution import sample
from projhuber.mapping import (
    NormalizedObservation,
    NormalizedParams,
    activation,
    normalize_obs,
    normalized_to_world,
    stats_from_ranges,
)
from projhuber.special import DomainError
from projhuber.verify import REFERENCE_CAMERA, REFERENCE_F_RANGE, REFERENCE_Z_RANGE, recovery_observations

# --- calibration curve ---------------------------------------------------------


def test_constant_predictor_gives_flat_curve():
    curve = calibration_curve(np.full(50, 2.0), np.linspace(0.0, 4.0, 50), window=10)
    np.testing.assert_allclose(curve.predicted, 2.0)
    assert len(curve.predicted) == 50


def test_window_larger_than_data_collapses_to_global_mean():
    pv, se = np.array([1.0, 2.0, 3.0]), np.array([0.5, 1.0, 9.0])
    curve = calibration_curve(pv, se, window=10)
    assert curve.to_pairs() == [(2.0, pytest.approx(10.5 / 3))]


def test_window_one_is_the_sorted_data():
    pv, se = np.array([3.0, 1.0, 2.0]), np.array([30.0, 10.0, 20.0])
    curve = calibration_curve(pv, se, window=1)
    np.testing.assert_array_equal(curve.predicted, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(curve.empirical, [10.0, 20.0, 30.0])


def test_window_bounds_truncate_at_ends():
    lo, hi = window_bounds(10, 4)
    assert (lo[0], hi[0]) == (0, 2)
    assert (lo[5], hi[5]) == (3, 7)
    assert (lo[-1], hi[-1]) == (7, 10)


@pytest.mark.parametrize(
    "pv, se, window",
    [([], [], 5), ([1.0], [1.0, 2.0], 5), ([1.0, 2.0], [1.0, 1.0], 0), ([-1.0, 1.0], [1.0, 1.0], 1)],
)
def test_calibration_domain(pv, se, window):
    with pytest.raises(DomainError):
        calibration_curve(pv, se, window)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 300), st.integers(1, 50))
def test_calibration_permutation_invariant_and_monotone(seed, n, window):
    rng = np.random.default_rng(seed)
    # Coarse values force ties in the predicted variance.
    pv = rng.integers(1, 6, n).astype(float)
    se = rng.exponential(size=n) * pv
    curve = calibration_curve(pv, se, window)
    perm = rng.permutation(n)
    other = calibration_curve(pv[perm], se[perm], window)
    np.testing.assert_array_equal(curve.predicted, other.predicted)
    np.testing.assert_array_equal(curve.empirical, other.empirical)
    assert np.all(np.diff(curve.predicted) >= 0)


# --- synthetic rig ----------------------------------------------------------------


def test_simulate_rig_is_deterministic():
    a = simulate_rig(ScenarioConfig(seed=11))
    b = simulate_rig(ScenarioConfig(seed=11))
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u.pose.R, v.pose.R)
        np.testing.assert_array_equal(u.params.A, v.params.A)
        assert (u.params.mu_x, u.params.mu_z, u.params.a) == (v.params.mu_x, v.params.mu_z, v.params.a)
    c = simulate_rig(ScenarioConfig(seed=12))
    assert not np.allclose(a[0].pose.t, c[0].pose.t)


def test_simulated_cameras_see_truth_near_centre():
    cfg = ScenarioConfig(n_views=6, truth=(1.0, -2.0, 0.5), seed=3)
    for view in simulate_rig(cfg):
        x, y, z = view.pose.to_camera(np.asarray(cfg.truth))
        assert z == pytest.approx(np.linalg.norm(view.pose.t - cfg.truth))
        assert abs(x) < 1e-9 and abs(y) < 1e-9


def test_noise_free_rig_modes_hit_truth():
    cfg = ScenarioConfig(proj_jitter=0.0, depth_jitter=0.0, seed=1)
    for view in simulate_rig(cfg):
        np.testing.assert_allclose(view.world_mode(), cfg.truth, atol=1e-12)


def test_look_at_is_rotation_and_rejects_vertical():
    R = look_at([3.0, 1.0, 2.0], [0.0, 0.0, 0.0])
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-14)
    assert np.linalg.det(R) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        look_at([0.0, 0.0, 5.0], [0.0, 0.0, 0.0])


@pytest.mark.parametrize(
    "kwargs",
    [dict(n_views=0), dict(rig_radius=0.0), dict(proj_jitter=-1.0), dict(a_range=(2.0, 1.0)), dict(f=0.0)],
)
def test_scenario_validation(kwargs):
    with pytest.raises(DomainError):
        ScenarioConfig(**kwargs)


# --- direct fit ---------------------------------------------------------------------


def test_raw_from_params_inverts_activation():
    params = dict(nu_p=np.array([0.2, -0.4]), nu_z=0.7, B=np.array([[3.0, 0.4], [0.4, 2.5]]), a=3.5)
    got = activation(raw_from_params(**params))
    np.testing.assert_allclose(got.nu_p, params["nu_p"], atol=1e-14)
    assert got.nu_z == pytest.approx(0.7, rel=1e-14)
    np.testing.assert_allclose(got.B, params["B"], atol=1e-14)
    assert got.a == pytest.approx(3.5, rel=1e-14)
    with pytest.raises(DomainError):
        raw_from_params([0, 0], 1.0, np.eye(2) * 1.5, 2.0)


def test_fit_repeated_point_recovers_its_mode():
    obs = NormalizedObservation(v_p=np.tile([0.3, -0.2], (5, 1)), z_p=np.full(5, 1.2))
    res = fit_params(obs)
    nu_p, nu_z = res.params.mode
    np.testing.assert_allclose(nu_p, [0.3, -0.2], atol=1e-6)
    assert nu_z == pytest.approx(1.2, rel=1e-6)
    assert res.converged


def test_fit_sample_fit_closure():
    # Fit, draw from the fitted model, refit: the two fits should agree closely.
    obs = recovery_observations(20_000, seed=21)
    first = fit_params(obs)
    stats = stats_from_ranges(REFERENCE_Z_RANGE, REFERENCE_F_RANGE)
    world = normalized_to_world(first.params, REFERENCE_CAMERA, stats)
    second = fit_params(normalize_obs(sample(world, 20_000, 22), REFERENCE_CAMERA, stats))
    assert second.params.nu_z == pytest.approx(first.params.nu_z, rel=0.02)
    assert second.params.a == pytest.approx(first.params.a, rel=0.15)
    assert np.abs(second.params.B - first.params.B).max() <= 0.1 * np.abs(first.params.B).max()


def test_fit_flags_boundary_when_data_is_too_spread_in_depth():
    rng = np.random.default_rng(5)
    z = np.exp(rng.normal(scale=2.0, size=400))
    obs = NormalizedObservation(v_p=rng.normal(scale=0.1, size=(400, 2)), z_p=z)
    res = fit_params(obs)
    assert res.at_boundary
    assert res.params.a == pytest.approx(1.0)


def test_fit_concentrated_data_is_interior():
    obs = recovery_observations(5_000, seed=3)
    res = fit_params(obs)
    assert not res.at_boundary and res.converged
    assert isinstance(res.params, NormalizedParams)


def test_fit_needs_three_samples():
    obs = NormalizedObservation(v_p=np.zeros((2, 2)), z_p=np.ones(2))
    with pytest.raises(DomainError):
        fit_params(obs)
