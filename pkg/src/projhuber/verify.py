"""Invariant and acceptance checks with independent oracles.

Each ``check_*`` function returns a :class:`CheckResult`.  Sizes are
parameters so the same code backs both the quick ``verify`` CLI run and the
full acceptance suite.  The oracles here never reuse the code path they
check: finite differences for gradients, adaptive Simpson for the
quadrature, grid sums for integrals and brute-force grids for the solvers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import distribution as dist
from .distribution import DistParams, log_pdf, moments, nll_and_grad, sample
from .fusion import Plane, fuse, nll_world, plane_mle, total_nll_batch
from .harness import (
    ScenarioConfig,
    calibration_curve,
    fit_params,
    random_spd,
    raw_from_params,
    simulate_rig,
    window_bounds,
)
from .mapping import (
    CameraIntrinsics,
    NormalizedObservation,
    _loss_parts,
    NormalizedParams,
    depth_regression_term,
    loss,
    loss_from_raw,
    normalize_obs,
    normalized_to_world,
    stats_from_ranges,
)
from .special import g1, g1_simpson, log_norm_depth, scaled_gamma, scaled_gamma_simpson

REFERENCE_Z_RANGE = (3.0, 5.0)
REFERENCE_F_RANGE = (1200.0, 2000.0)
REFERENCE_CAMERA = CameraIntrinsics(f=1550.0, S=224.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self) -> dict:
        details = [{"name": k, "value": _jsonable(v)} for k, v in self.details.items()]
        return {"suite": self.name, "passed": bool(self.passed), "details": details}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} ({self.seconds:.2f}s)"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _timed(name, fn):
    start = time.perf_counter()
    passed, details = fn()
    return CheckResult(name, bool(passed), details, time.perf_counter() - start)


def random_dist_params(rng: np.random.Generator) -> DistParams:
    return DistParams(
        mu_x=rng.uniform(-0.5, 0.5),
        mu_y=rng.uniform(-0.5, 0.5),
        mu_z=rng.uniform(0.5, 5.0),
        A=random_spd(rng, 0.5, 4.0),
        a=rng.uniform(0.5, 10.0),
    )


def central_difference(f, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    grad = np.empty(x.size)
    for i in range(x.size):
        h = step * max(1.0, abs(x.flat[i]))
        e = np.zeros(x.size)
        e[i] = h
        e = e.reshape(x.shape)
        grad[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return grad.reshape(x.shape)


def relative_error(g, ref) -> float:
    return float(np.linalg.norm(np.ravel(g) - np.ravel(ref)) / np.linalg.norm(np.ravel(ref)))


# --- 1. constants -------------------------------------------------------------


def check_constants():
    def run():
        stats = stats_from_ranges(REFERENCE_Z_RANGE, REFERENCE_F_RANGE)
        ok = abs(stats.mu_z0 - 2.5e-3) <= 1e-6 and abs(stats.D - 1.6667) <= 1e-3
        return ok, {"mu_z0": stats.mu_z0, "D": stats.D}

    return _timed("constants", run)


# --- 2. normalization ---------------------------------------------------------


def grid_integral(params: DistParams, n_s: int = 240, k_half: float = 40.0, k_step: float = 0.25) -> float:
    """Integral of exp(log_pdf) on a tensor grid in (log depth, whitened offset).

    v(s, k) = z * (mu_p + (mu_z / z) A^-1 k, 1) with z = mu_z e^s has volume
    element z mu_z^2 / |A| ds dk.  Midpoint rule in every coordinate.
    """
    a = params.a
    s_span = math.log(max(80.0 / a, 2.0))
    s_edges = np.linspace(-s_span, s_span, n_s + 1)
    s_mid = 0.5 * (s_edges[1:] + s_edges[:-1])
    ds = s_edges[1] - s_edges[0]
    k_axis = np.arange(-k_half + 0.5 * k_step, k_half, k_step)
    k1, k2 = np.meshgrid(k_axis, k_axis, indexing="ij")
    k = np.stack([k1.ravel(), k2.ravel()], axis=-1)
    offsets = k @ np.linalg.inv(params.A).T  # A^-1 k for each row
    det_a = np.linalg.det(params.A)
    total = 0.0
    for s in s_mid:
        z = params.mu_z * math.exp(s)
        proj = params.mu_p + (params.mu_z / z) * offsets
        pts = np.column_stack([proj * z, np.full(len(proj), z)])
        total += np.exp(log_pdf(pts, params)).sum() * z * params.mu_z**2 / det_a
    return float(total * ds * k_step * k_step)


def importance_integral(params: DistParams, n: int, seed: int) -> float:
    """Integral of the density estimated with draws from a wider member of the family."""
    proposal = params.replace(A=params.A * 0.7, a=params.a * 0.7, mu_z=params.mu_z * 1.1)
    pts = sample(proposal, n, seed)
    return float(np.mean(np.exp(log_pdf(pts, params) - log_pdf(pts, proposal))))


def check_normalization(n_sets: int = 5, n_mc: int = 10**6, seed: int = 0, tol: float = 0.01, grid_n_s: int = 240):
    def run():
        rng = np.random.default_rng(seed)
        rows = []
        ok = True
        for i in range(n_sets):
            params = random_dist_params(rng)
            mc = importance_integral(params, n_mc, seed + 1000 + i)
            grid = grid_integral(params, n_s=grid_n_s)
            ok &= abs(mc - 1.0) <= tol and abs(grid - 1.0) <= tol
            rows.append({"mu_z": params.mu_z, "a": params.a, "monte_carlo": mc, "grid": grid})
        return ok, {"sets": rows, "tolerance": tol}

    return _timed("normalization", run)


# --- 3. moments ---------------------------------------------------------------


def mc_moment_zscores(params: DistParams, n: int, seed: int) -> dict:
    pts = sample(params, n, seed)
    proj = pts[:, :2] / pts[:, 2:3]
    z = pts[:, 2]
    ref = moments(params)
    out = {}
    mean_p = proj.mean(axis=0)
    out["mean_proj"] = (mean_p - ref.mean_proj) / (proj.std(axis=0) / math.sqrt(n))
    d = proj - mean_p
    cov_z = []
    for i, j in ((0, 0), (0, 1), (1, 1)):
        prod = d[:, i] * d[:, j]
        cov_z.append((prod.mean() - ref.var_proj[i, j]) / (prod.std() / math.sqrt(n)))
    out["var_proj"] = np.array(cov_z)
    out["mean_depth"] = (z.mean() - ref.mean_depth) / (z.std() / math.sqrt(n))
    dz2 = (z - z.mean()) ** 2
    out["var_depth"] = (dz2.mean() - ref.var_depth) / (dz2.std() / math.sqrt(n))
    return out


def check_moments(n_sets: int = 5, n: int = 10**6, seed: int = 1, n_sigma: float = 3.0):
    def run():
        rng = np.random.default_rng(seed)
        rows, worst = [], 0.0
        for i in range(n_sets):
            params = random_dist_params(rng)
            zs = mc_moment_zscores(params, n, seed + 2000 + i)
            flat = np.concatenate([np.ravel(v) for v in zs.values()])
            worst = max(worst, float(np.abs(flat).max()))
            rows.append({"a": params.a, "max_abs_z": float(np.abs(flat).max())})
        a_grid = np.concatenate([np.linspace(1.0 + 1e-9, 5.0, 200), np.linspace(5.0, 50.0, 200)])
        ratios = np.array([dist.depth_moment_ratios(a)[0] for a in a_grid])
        bound_ok = bool(np.all((ratios > 1.0) & (ratios < 1.7)))
        details = {
            "sets": rows,
            "worst_abs_z": worst,
            "mean_depth_ratio_range": [float(ratios.min()), float(ratios.max())],
        }
        return worst <= n_sigma and bound_ok, details

    return _timed("moments", run)


# --- 4. gradients -------------------------------------------------------------


def _smooth_world_point(rng, params):
    while True:
        v = sample(params, 1, int(rng.integers(2**31)))[0]
        nll_and_grad(v, params)
        q = (v[:2] - v[2] * params.mu_p) @ params.A / params.mu_z
        if abs(np.linalg.norm(q) - 1.0) > 1e-3 and abs(v[2] / params.mu_z - 1.0) > 1e-3:
            return v


def _random_normalized_params(rng) -> NormalizedParams:
    M = rng.normal(size=(2, 2))
    return NormalizedParams(
        nu_p=rng.normal(size=2),
        nu_z=math.exp(rng.normal(scale=0.4)),
        B=np.eye(2) + M @ M.T,
        a=math.exp(rng.normal()),
    )


def _random_obs(rng, D=1.6667) -> NormalizedObservation:
    return NormalizedObservation(rng.uniform(-1, 1, 2), math.exp(rng.uniform(-math.log(D), math.log(D))))


def check_gradients(n_points: int = 100, seed: int = 2, tol: float = 1e-5):
    def run():
        rng = np.random.default_rng(seed)
        worst = {"log_pdf": 0.0, "loss": 0.0, "loss_from_raw": 0.0, "nll_world": 0.0}

        count = 0
        while count < n_points:
            params = random_dist_params(rng)
            v = _smooth_world_point(rng, params)
            g = -nll_and_grad(v, params)[1]
            fd = central_difference(lambda p: log_pdf(p, params), v)
            worst["log_pdf"] = max(worst["log_pdf"], relative_error(g, fd))
            count += 1

        count = 0
        while count < n_points:
            np_ = _random_normalized_params(rng)
            obs = _random_obs(rng)
            r = np.linalg.norm(np_.B @ obs.v_p - np_.nu_p) * obs.z_p
            if abs(r - 1.0) < 1e-3 or abs(obs.z_p / np_.nu_z - 1.0) < 1e-3:
                continue
            _, g = loss(np_, obs)
            flat = np.concatenate([g.nu_p, [g.nu_z], g.B.ravel(), [g.a]])

            x0 = np.concatenate([np_.nu_p, [np_.nu_z], np_.B.ravel(), [np_.a]])
            fd = central_difference(lambda x: _loss_flat(x, obs), x0)
            worst["loss"] = max(worst["loss"], relative_error(flat, fd))
            count += 1

        count = 0
        while count < n_points:
            w = rng.normal(size=7) * 1.5
            obs = _random_obs(rng)
            if abs(w[6]) < 1e-3 or abs(w[5]) < 1e-3:
                continue
            value, g = loss_from_raw(w, obs)
            fd = central_difference(lambda x: loss_from_raw(x, obs)[0], w)
            worst["loss_from_raw"] = max(worst["loss_from_raw"], relative_error(g, fd))
            count += 1

        count = 0
        while count < n_points:
            views = simulate_rig(ScenarioConfig(n_views=1, seed=int(rng.integers(2**31)), proj_jitter=0.01, depth_jitter=0.1))
            view = views[0]
            v_cam = _smooth_world_point(rng, view.params)
            v = view.pose.to_world(v_cam)
            g = nll_world(v, view)[1]
            fd = central_difference(lambda p: nll_world(p, view)[0], v)
            worst["nll_world"] = max(worst["nll_world"], relative_error(g, fd))
            count += 1

        return all(x < tol for x in worst.values()), {"worst_relative_error": worst, "tolerance": tol}

    return _timed("gradients", run)


def _loss_flat(x, obs):
    # Bypasses NormalizedParams validation so B entries can be perturbed independently.
    value, _ = _loss_parts(x[0:2], x[2], x[3:7].reshape(2, 2), x[7], obs.v_p, obs.z_p)
    return float(value)


# --- 5. convexity -------------------------------------------------------------


def nll_chord_violations(n_chords: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    per_set = max(1, n_chords // 10)
    done = 0
    while done < n_chords:
        params = random_dist_params(rng)
        m = min(per_set, n_chords - done)
        pts = sample(params, 2 * m, int(rng.integers(2**31)))
        v0, v1 = pts[:m], pts[m:]
        f0 = -log_pdf(v0, params)
        f1 = -log_pdf(v1, params)
        fm = -log_pdf(0.5 * (v0 + v1), params)
        worst = max(worst, float(np.max(fm - 0.5 * (f0 + f1))))
        done += m
    return worst


def draw_convex_region_raw(rng, n: int) -> np.ndarray:
    """Raw outputs with w1 >= 0 and the 2x2 raw block PSD (linear activation region)."""
    w = rng.normal(size=(n, 7)) * 2.0
    w[:, 5] = np.abs(w[:, 5])
    M = rng.normal(size=(n, 2, 2))
    P = M @ np.swapaxes(M, 1, 2)
    w[:, 0], w[:, 1], w[:, 2] = P[:, 0, 0], P[:, 0, 1], P[:, 1, 1]
    return w


def raw_loss_chord_violations(n_chords: int, seed: int, D: float = 1.6667) -> float:
    rng = np.random.default_rng(seed)
    w0 = draw_convex_region_raw(rng, n_chords)
    w1 = draw_convex_region_raw(rng, n_chords)
    obs = NormalizedObservation(
        rng.uniform(-1, 1, (n_chords, 2)), np.exp(rng.uniform(-math.log(D), math.log(D), n_chords))
    )
    f0 = loss_from_raw(w0, obs)[0]
    f1 = loss_from_raw(w1, obs)[0]
    fm = loss_from_raw(0.5 * (w0 + w1), obs)[0]
    return float(np.max(fm - 0.5 * (f0 + f1)))


def random_fusion_problem(rng, n_views=None):
    n_views = int(rng.integers(2, 6)) if n_views is None else n_views
    cfg = ScenarioConfig(
        n_views=n_views,
        truth=tuple(rng.uniform(-1, 1, 3)),
        rig_radius=rng.uniform(2.0, 6.0),
        proj_jitter=0.01,
        depth_jitter=0.1,
        precision_range=(20.0, 200.0),
        a_range=(2.0, 20.0),
        seed=int(rng.integers(2**31)),
    )
    return cfg, simulate_rig(cfg)


def fused_chord_violations(n_chords: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    per_problem = max(1, n_chords // 20)
    done = 0
    while done < n_chords:
        cfg, views = random_fusion_problem(rng)
        center = np.asarray(cfg.truth)
        m = min(per_problem, n_chords - done)
        pts = center + rng.normal(scale=0.3, size=(4 * m, 3))
        vals = total_nll_batch(pts, views)
        pts = pts[np.isfinite(vals)]
        if len(pts) < 2 * m:
            continue
        v0, v1 = pts[:m], pts[m : 2 * m]
        f0, f1 = total_nll_batch(v0, views), total_nll_batch(v1, views)
        fm = total_nll_batch(0.5 * (v0 + v1), views)
        worst = max(worst, float(np.max(fm - 0.5 * (f0 + f1))))
        done += m
    return worst


def check_convexity(n_chords: int = 10**4, seed: int = 3, tol: float = 1e-9, parts=("nll", "raw_loss", "fused")):
    def run():
        found = {}
        if "nll" in parts:
            found["nll_in_v"] = nll_chord_violations(n_chords, seed)
        if "raw_loss" in parts:
            found["loss_in_w"] = raw_loss_chord_violations(n_chords, seed + 1)
        if "fused" in parts:
            found["fused_nll"] = fused_chord_violations(n_chords, seed + 2)
        return all(v <= tol for v in found.values()), {"max_midpoint_violation": found, "tolerance": tol}

    name = "convexity" if len(parts) == 3 else "convexity[" + ",".join(parts) + "]"
    return _timed(name, run)


# --- 6. bounded gradients -------------------------------------------------------


def check_bounded_gradients(n: int = 10**5, seed: int = 4, D: float | None = None):
    def run():
        d = stats_from_ranges(REFERENCE_Z_RANGE, REFERENCE_F_RANGE).D if D is None else D
        rng = np.random.default_rng(seed)
        w1 = rng.uniform(-6.0, 6.0, n)
        w2 = rng.uniform(-30.0, 30.0, n)
        z_p = np.exp(rng.uniform(-math.log(d), math.log(d), n))
        _, g_a, g_w, linear = depth_regression_term(w1, w2, z_p)
        norm_a = np.linalg.norm(g_a, axis=-1)
        norm_w = np.linalg.norm(g_w, axis=-1)
        lin_sup = float(max(norm_a[linear].max(initial=0), norm_w[linear].max(initial=0)))
        other_sup = float(max(norm_a[~linear].max(initial=0), norm_w[~linear].max(initial=0)))
        a_grid = np.geomspace(1.0 + 1e-12, 1e3, 20000)
        dnorm_sup = float(np.abs(log_norm_depth(a_grid)[1]).max())
        ok = lin_sup <= math.sqrt(2) * d and other_sup <= math.sqrt(5) * d and dnorm_sup <= 4.0
        details = {
            "D": d,
            "linear_branch_sup": lin_sup,
            "linear_branch_bound": math.sqrt(2) * d,
            "other_branch_sup": other_sup,
            "other_branch_bound": math.sqrt(5) * d,
            "normalizer_derivative_sup": dnorm_sup,
        }
        return ok, details

    return _timed("bounded_gradients", run)


# --- 7. fusion optimality -------------------------------------------------------


def grid_minimum(f_batch, center, half_width, step):
    """Minimum of ``f_batch`` over a regular grid (any dimension) centred on ``center``."""
    center = np.asarray(center, dtype=float)
    k = int(round(half_width / step))
    axis = np.arange(-k, k + 1) * step
    mesh = np.meshgrid(*([axis] * center.size), indexing="ij")
    pts = center + np.stack([m.ravel() for m in mesh], axis=-1)
    vals = f_batch(pts)
    i = int(np.argmin(vals))
    return float(vals[i]), pts[i]


def brute_force_minimum(f_batch, center, coarse_half=0.4, fine_step=1e-3):
    """Zooming grid search ending on a ``fine_step`` grid, independent of the solver."""
    best = np.asarray(center, dtype=float)
    half, step = coarse_half, coarse_half / 20.0
    while step > fine_step:
        _, best = grid_minimum(f_batch, best, half, step)
        half, step = 3.0 * step, step / 4.0
    # Final grid is offset by half a step so it cannot land on the solver's own point.
    return grid_minimum(f_batch, best + 0.5 * fine_step, 15 * fine_step, fine_step)


def check_fusion(n_problems: int = 50, seed: int = 5, tol: float = 1e-6, grid_step: float = 1e-3):
    def run():
        rng = np.random.default_rng(seed)
        worst_gap, worst_plane_gap, worst_plane_residual = -np.inf, -np.inf, 0.0
        for _ in range(n_problems):
            cfg, views = random_fusion_problem(rng)
            res = fuse(views)
            grid_val, _ = brute_force_minimum(lambda p: total_nll_batch(p, views), np.asarray(cfg.truth), fine_step=grid_step)
            worst_gap = max(worst_gap, res.nll - grid_val)

            normal = np.array([0.0, 0.0, 1.0]) + rng.normal(scale=0.2, size=3)
            normal /= np.linalg.norm(normal)
            anchor = np.asarray(cfg.truth) + rng.normal(scale=0.05, size=3)
            plane = Plane(normal, float(normal @ anchor))
            pres = plane_mle(views, plane)
            worst_plane_residual = max(worst_plane_residual, abs(plane.d @ pres.v_star - plane.c))
            origin, basis = plane.basis()
            u_center = basis.T @ (anchor - origin)
            pgrid, _ = brute_force_minimum(
                lambda u: total_nll_batch(origin + u @ basis.T, views), u_center, fine_step=grid_step
            )
            worst_plane_gap = max(worst_plane_gap, pres.nll - pgrid)
        ok = worst_gap <= tol and worst_plane_gap <= tol and worst_plane_residual <= 1e-10
        details = {
            "worst_solver_minus_grid": worst_gap,
            "worst_plane_solver_minus_grid": worst_plane_gap,
            "worst_plane_residual": worst_plane_residual,
        }
        return ok, details

    return _timed("fusion_optimality", run)


# --- 8. parameter recovery ------------------------------------------------------


RECOVERY_TRUTH = dict(nu_p=np.zeros(2), nu_z=1.0, B=3.0 * np.eye(2), a=5.0)


def recovery_observations(n: int, seed: int) -> NormalizedObservation:
    stats = stats_from_ranges(REFERENCE_Z_RANGE, REFERENCE_F_RANGE)
    truth = NormalizedParams(**RECOVERY_TRUTH)
    world = normalized_to_world(truth, REFERENCE_CAMERA, stats)
    return normalize_obs(sample(world, n, seed), REFERENCE_CAMERA, stats)


def check_parameter_recovery(n: int = 50_000, seed: int = 6):
    def run():
        obs = recovery_observations(n, seed)
        first = fit_params(obs)
        other_init = raw_from_params(np.array([0.3, -0.2]), 1.4, np.array([[4.0, 0.5], [0.5, 2.5]]), 2.0)
        second = fit_params(obs, init=other_init)
        est = first.params
        nu_z_err = abs(est.nu_z - 1.0)
        a_err = abs(est.a - 5.0) / 5.0
        b_err = float(np.abs(est.B - 3.0 * np.eye(2)).max() / 3.0)
        loss_gap = abs(first.loss - second.loss)
        ok = nu_z_err <= 0.02 and a_err <= 0.15 and b_err <= 0.10 and loss_gap <= 1e-6
        details = {
            "nu_z": est.nu_z,
            "a": est.a,
            "B": est.B,
            "nu_p": est.nu_p,
            "relative_errors": {"nu_z": nu_z_err, "a": a_err, "B": b_err},
            "loss_gap_between_inits": loss_gap,
            "converged": [first.converged, second.converged],
        }
        return ok, details

    return _timed("parameter_recovery", run)


# --- 9. calibration ---------------------------------------------------------------


def check_calibration(n: int = 10_000, window: int = 200, seed: int = 7, n_sigma: float = 3.0):
    def run():
        rng = np.random.default_rng(seed)
        pv = np.exp(rng.uniform(math.log(0.1), math.log(10.0), n))
        se = rng.normal(size=n) ** 2 * pv
        curve = calibration_curve(pv, se, window)
        # Per-window standard error of the mean squared error: Var[e^2] = 2 v^2.
        order = np.lexsort((se, pv))
        lo, hi = window_bounds(n, window)
        c2 = np.concatenate([[0.0], np.cumsum(2.0 * pv[order] ** 2)])
        sem = np.sqrt(c2[hi] - c2[lo]) / (hi - lo)
        z = (curve.empirical - curve.predicted) / sem
        # Neighbouring centred windows share almost all samples; judge the
        # n/window disjoint ones so each test sees independent data.
        tiles = np.arange(window // 2, n, window)
        ok = bool(np.all(np.abs(z[tiles]) <= n_sigma)) and bool(np.all(np.diff(curve.predicted) >= 0))
        details = {
            "max_abs_z_disjoint": float(np.abs(z[tiles]).max()),
            "max_abs_z_all_positions": float(np.abs(z).max()),
            "windows": int(len(tiles)),
        }
        return ok, details

    return _timed("calibration", run)


# --- 10. special functions ----------------------------------------------------------


def check_special():
    def run():
        grid = np.geomspace(1e-3, 1e3, 200)
        vals = g1(grid)
        in_range = bool(np.all((vals > 0) & (vals < 1)))
        limit_gap = abs(g1(100.0) - 1.0)
        test_a = np.geomspace(0.05, 50.0, 50)
        gl_vs_simpson = max(abs(g1(a) - g1_simpson(a)) for a in test_a)
        rec = 0.0
        for a in np.geomspace(0.1, 20.0, 25):
            for k in (-2, -3):
                rec = max(rec, abs(scaled_gamma(k, a) / scaled_gamma_simpson(k, a) - 1.0))
        ok = in_range and limit_gap < 0.03 and gl_vs_simpson < 1e-9 and rec < 1e-8
        details = {
            "g1_in_unit_interval": in_range,
            "g1_100_gap": limit_gap,
            "gauss_legendre_vs_simpson": gl_vs_simpson,
            "recurrence_vs_quadrature_rel": rec,
        }
        return ok, details

    return _timed("special_functions", run)


# --- suite runner -----------------------------------------------------------------------


def run_suite(full: bool = False, seed: int = 0) -> list[CheckResult]:
    """All checks; ``full`` uses acceptance sizes, otherwise a quick pass."""
    if full:
        return [
            check_constants(),
            check_normalization(seed=seed),
            check_moments(seed=seed + 1),
            check_gradients(seed=seed + 2),
            check_convexity(seed=seed + 3, parts=("nll",)),
            check_convexity(seed=seed + 3, parts=("raw_loss",)),
            check_convexity(seed=seed + 3, parts=("fused",)),
            check_bounded_gradients(seed=seed + 4),
            check_fusion(seed=seed + 5),
            check_parameter_recovery(seed=seed + 6),
            check_calibration(seed=seed + 7),
            check_special(),
        ]
    return [
        check_constants(),
        check_normalization(n_sets=2, n_mc=200_000, seed=seed, grid_n_s=120),
        check_moments(n_sets=2, n=200_000, seed=seed + 1),
        check_gradients(n_points=30, seed=seed + 2),
        check_convexity(n_chords=2000, seed=seed + 3, parts=("nll",)),
        check_convexity(n_chords=2000, seed=seed + 3, parts=("raw_loss",)),
        check_convexity(n_chords=2000, seed=seed + 3, parts=("fused",)),
        check_bounded_gradients(n=20_000, seed=seed + 4),
        check_fusion(n_problems=5, seed=seed + 5),
        check_parameter_recovery(n=20_000, seed=seed + 6),
        check_calibration(seed=seed + 7),
        check_special(),
    ]
