"""Maximum-likelihood fusion of per-camera Projected Huber estimates.

Each view contributes ``-log p(R^T (v - t))`` to a total that is convex in
the world point ``v``; the ground-plane variant restricts ``v`` to
``d.v = c``.  Rigid transforms have unit Jacobian so no volume terms appear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, lsq_linear

from .distribution import DistParams, mode, nll_and_grad
from .mapping import CameraIntrinsics
from .solver import minimize
from .special import DomainError


class InfeasibleError(DomainError):
    """No point with finite total NLL exists (views or plane do not overlap)."""


@dataclass(frozen=True)
class CameraPose:
    """Rigid pose with ``v_world = R @ v_cam + t``."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if R.shape != (3, 3) or t.shape != (3,):
            raise DomainError("R must be 3x3 and t a 3-vector")
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-10, rtol=0) or np.linalg.det(R) <= 0:
            raise DomainError("R must be a proper rotation")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    def to_camera(self, v_world):
        return (np.asarray(v_world, dtype=float) - self.t) @ self.R

    def to_world(self, v_cam):
        return np.asarray(v_cam, dtype=float) @ self.R.T + self.t

    @property
    def axis(self) -> np.ndarray:
        """Optical axis (camera +z) in world coordinates."""
        return self.R[:, 2]


@dataclass(frozen=True)
class ViewEstimate:
    pose: CameraPose
    intrinsics: CameraIntrinsics
    params: DistParams

    def world_mode(self) -> np.ndarray:
        return self.pose.to_world(mode(self.params))


@dataclass(frozen=True)
class Plane:
    d: np.ndarray
    c: float

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise DomainError("plane normal must be a unit 3-vector")
        object.__setattr__(self, "d", d)

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        """A point on the plane and a 3x2 orthonormal basis of its directions."""
        # QR of [d | I]: the first column spans d, the next two complete the frame.
        q, _ = np.linalg.qr(np.column_stack([self.d, np.eye(3)]))
        return self.c * self.d, q[:, 1:3]


@dataclass
class FusionResult:
    v_star: np.ndarray
    nll: float
    iterations: int
    converged: bool


def nll_world(v, view: ViewEstimate) -> tuple[float, np.ndarray]:
    """Per-view NLL at a world point, ``+inf`` behind the camera."""
    value, g_cam = nll_and_grad(view.pose.to_camera(v), view.params)
    if not np.isfinite(value):
        return value, np.full(3, np.nan)
    return value, view.pose.R @ g_cam


def total_nll(v, views) -> tuple[float, np.ndarray]:
    total, grad = 0.0, np.zeros(3)
    for view in views:
        value, g = nll_world(v, view)
        if not np.isfinite(value):
            return np.inf, np.full(3, np.nan)
        total += value
        grad += g
    return total, grad


def total_nll_batch(points, views) -> np.ndarray:
    """Total NLL at many world points at once (no gradients)."""
    pts = np.asarray(points, dtype=float)
    out = np.zeros(pts.shape[:-1])
    for view in views:
        out = out + nll_and_grad(view.pose.to_camera(pts), view.params)[0]
    return out


def _lp_feasible_point(views, origin, basis):
    """Point ``origin + basis @ u`` strictly in front of every camera, or None.

    Maximizes the smallest signed depth (capped at 1 m) inside a generous box.
    """
    k = basis.shape[1]
    axes = np.array([view.pose.axis for view in views])
    offsets = np.array([view.pose.axis @ (view.pose.t - origin) for view in views])
    # depth_i = axes_i . (origin + basis u - t_i) >= s   ->   -(axes_i basis) u + s <= -offsets_i
    A_ub = np.column_stack([-(axes @ basis), np.ones(len(views))])
    scene = max(1.0, max(np.linalg.norm(view.pose.t - origin) for view in views))
    bounds = [(-100.0 * scene, 100.0 * scene)] * k + [(None, 1.0)]
    res = linprog(np.r_[np.zeros(k), -1.0], A_ub=A_ub, b_ub=-offsets, bounds=bounds, method="highs")
    if res.status != 0 or res.x[-1] <= 0:
        return None
    return res.x[:k]


def _default_init(views) -> np.ndarray:
    modes = np.array([view.world_mode() for view in views])
    start = modes.mean(axis=0)
    target = modes[0]
    for _ in range(60):
        if np.isfinite(total_nll(start, views)[0]):
            return start
        start = 0.5 * (start + target)
    if np.isfinite(total_nll(target, views)[0]):
        return target
    u = _lp_feasible_point(views, np.zeros(3), np.eye(3))
    if u is None:
        raise InfeasibleError("no point lies in front of every camera")
    return u


# A view's depth term a * max(z/mu_z, mu_z/z) has a kink on the plane where the
# camera depth equals mu_z.  Quasi-Newton steps can stall there, so the result is
# refined with an active-set pass over those planes.
KINK_TOL = 1e-7
POLISH_ROUNDS = 20


def _kink_rows(views, origin, basis, u):
    """Active kinks at ``origin + basis @ u``.

    Returns (normals, offsets, jumps, used): the kink is ``normals @ u == offsets``,
    its subdifferential spans ``c * jumps * normal`` for c in [-1, 1], and
    ``used`` is the depth-term slope the plain gradient included.
    """
    v = origin + basis @ u
    rows = []
    for view in views:
        p, axis = view.params, view.pose.axis
        z = axis @ (v - view.pose.t)
        if abs(z / p.mu_z - 1.0) > KINK_TOL:
            continue
        used = p.a / p.mu_z if z >= p.mu_z else -p.a * p.mu_z / z**2
        rows.append((basis.T @ axis, p.mu_z - axis @ (origin - view.pose.t), p.a / p.mu_z, used))
    if not rows:
        return None
    normals, offsets, jumps, used = (np.array(col) for col in zip(*rows))
    return normals, offsets, jumps, used


def _min_norm_subgradient(g, kinks):
    """Shortest element of the local subdifferential and the kink multipliers."""
    normals, _, jumps, used = kinks
    smooth = g - used @ normals
    K = (normals * jumps[:, None]).T
    c = lsq_linear(K, -smooth, bounds=(-1.0, 1.0), method="bvls").x
    return smooth + K @ c, c


def _affine_subspace(normals, offsets, u):
    """Project ``u`` onto ``normals @ u == offsets``; also return a null-space basis."""
    u_p = u - np.linalg.pinv(normals) @ (normals @ u - offsets)
    _, s, vt = np.linalg.svd(normals)
    rank = int(np.sum(s > 1e-10 * s[0]))
    return u_p, vt[rank:].T


def _solve(views, origin, basis, u0, grad_tol, step_tol, max_iter):
    def objective(u):
        value, g = total_nll(origin + basis @ u, views)
        return value, basis.T @ g if np.isfinite(value) else np.full(len(u), np.nan)

    res = minimize(objective, u0, grad_tol=grad_tol, step_tol=step_tol, max_iter=max_iter)
    u, f, iterations, converged = res.x, res.fun, res.iterations, res.converged
    for _ in range(POLISH_ROUNDS):
        kinks = _kink_rows(views, origin, basis, u)
        if kinks is None:
            break
        g_min, c = _min_norm_subgradient(objective(u)[1], kinks)
        if np.linalg.norm(g_min) <= grad_tol * max(1.0, abs(f)):
            converged = True
            break
        # Step off the kinks the subgradient wants to leave.
        t = 1.0
        while t > 1e-12:
            trial = u - t * g_min
            f_trial = objective(trial)[0]
            if f_trial < f - 1e-4 * t * (g_min @ g_min):
                u, f = trial, f_trial
                break
            t *= 0.5
        # Then minimize on the planes of the kinks that stay active.
        held = np.abs(c) < 1.0 - 1e-9
        kinks = _kink_rows(views, origin, basis, u)
        if kinks is not None and held.any() and len(kinks[0]) == len(held):
            u_p, null = _affine_subspace(kinks[0][held], kinks[1][held], u)
        else:
            u_p, null = u, np.eye(len(u))
        if null.shape[1] == 0:
            cand, f_cand = u_p, objective(u_p)[0]
        else:
            sub = minimize(
                lambda y: (lambda fg: (fg[0], null.T @ fg[1]))(objective(u_p + null @ y)),
                np.zeros(null.shape[1]),
                grad_tol=grad_tol,
                step_tol=step_tol,
                max_iter=max_iter,
            )
            cand, f_cand = u_p + null @ sub.x, sub.fun
            iterations += sub.iterations
        if not f_cand < f:
            break
        u, f = cand, f_cand
    return u, f, iterations, converged


def fuse(views, init=None, grad_tol: float = 1e-8, step_tol: float = 1e-12, max_iter: int = 5000) -> FusionResult:
    """World point maximizing the product of the per-view densities."""
    views = list(views)
    if not views:
        raise DomainError("fuse needs at least one view")
    start = None
    if init is not None:
        start = np.asarray(init, dtype=float)
        if not np.isfinite(total_nll(start, views)[0]):
            start = views[0].world_mode()
            if not np.isfinite(total_nll(start, views)[0]):
                start = None
    if start is None:
        start = _default_init(views)
    v, f, iterations, converged = _solve(views, np.zeros(3), np.eye(3), start, grad_tol, step_tol, max_iter)
    return FusionResult(v_star=v, nll=f, iterations=iterations, converged=converged)


def plane_mle(views, plane: Plane, grad_tol: float = 1e-8, step_tol: float = 1e-12, max_iter: int = 5000) -> FusionResult:
    """Most likely point on the plane ``d.v = c`` under all views."""
    views = list(views)
    if not views:
        raise DomainError("plane_mle needs at least one view")
    origin, basis = plane.basis()

    def objective(u):
        value, g = total_nll(origin + basis @ u, views)
        return value, basis.T @ g if np.isfinite(value) else g[:2]

    modes = np.array([view.world_mode() for view in views])
    u0 = basis.T @ (modes.mean(axis=0) - origin)
    if not np.isfinite(objective(u0)[0]):
        u0 = _lp_feasible_point(views, origin, basis)
        if u0 is None:
            raise InfeasibleError("the plane is not in front of every camera")
    u, f, iterations, converged = _solve(views, origin, basis, u0, grad_tol, step_tol, max_iter)
    return FusionResult(v_star=origin + basis @ u, nll=f, iterations=iterations, converged=converged)
