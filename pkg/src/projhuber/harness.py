"""Experiment plumbing: synthetic rigs, direct ML fitting and calibration curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distribution import DistParams
from .fusion import CameraPose, ViewEstimate
from .mapping import (
    RAW_DIM,
    CameraIntrinsics,
    NormalizedObservation,
    NormalizedParams,
    activation,
    loss_from_raw,
)
from .solver import minimize
from .special import DomainError

WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ScenarioConfig:
    """Synthetic multi-camera rig looking at one true point.

    Noise is applied to each view's estimate, not to the cameras:
    ``proj_jitter`` is the std of the projected-mean error (unitless x/z),
    ``depth_jitter`` the std of log(mu_z / true depth).
    """

    n_views: int = 4
    truth: tuple[float, float, float] = (0.0, 0.0, 1.0)
    rig_radius: float = 4.0
    elevation: float = 0.3  # camera height above truth, as a fraction of rig_radius
    proj_jitter: float = 0.004
    depth_jitter: float = 0.05
    precision_range: tuple[float, float] = (300.0, 500.0)  # eigenvalues of A
    a_range: tuple[float, float] = (15.0, 25.0)
    f: float = 1550.0
    S: float = 224.0
    seed: int = 0

    def __post_init__(self):
        if self.n_views < 1:
            raise DomainError("n_views must be >= 1")
        if not self.rig_radius > 0:
            raise DomainError("rig_radius must be > 0")
        if self.proj_jitter < 0 or self.depth_jitter < 0:
            raise DomainError("jitter must be >= 0")
        for name in ("precision_range", "a_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise DomainError(f"{name} must satisfy 0 < lo <= hi")
        if not (self.f > 0 and self.S > 0):
            raise DomainError("f and S must be > 0")


def look_at(center, target) -> np.ndarray:
    """Rotation whose camera axes (x right, y down, z forward) face ``target``."""
    forward = np.asarray(target, dtype=float) - np.asarray(center, dtype=float)
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, WORLD_UP)
    if np.linalg.norm(right) < 1e-9:
        raise DomainError("camera cannot look straight up or down")
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    return np.column_stack([right, down, forward])


def random_spd(rng: np.random.Generator, lo: float, hi: float) -> np.ndarray:
    angle = rng.uniform(0.0, math.pi)
    c, s = math.cos(angle), math.sin(angle)
    Q = np.array([[c, -s], [s, c]])
    return (Q * rng.uniform(lo, hi, size=2)) @ Q.T


def simulate_rig(config: ScenarioConfig) -> list[ViewEstimate]:
    rng = np.random.default_rng(config.seed)
    truth = np.asarray(config.truth, dtype=float)
    cam = CameraIntrinsics(config.f, config.S)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    views = []
    for i in range(config.n_views):
        theta = phase + 2.0 * math.pi * i / config.n_views
        center = truth + config.rig_radius * np.array(
            [math.cos(theta), math.sin(theta), config.elevation]
        )
        pose = CameraPose(R=look_at(center, truth), t=center)
        x, y, z = pose.to_camera(truth)
        if z <= 0 or max(abs(x / z), abs(y / z)) * config.f >= config.S / 2:
            raise DomainError("truth is outside a generated camera's field of view")
        mu_p = np.array([x / z, y / z]) + rng.normal(0.0, 1.0, 2) * config.proj_jitter
        mu_z = z * math.exp(rng.normal() * config.depth_jitter)
        A = random_spd(rng, *config.precision_range)
        a = rng.uniform(*config.a_range)
        params = DistParams(mu_x=mu_p[0], mu_y=mu_p[1], mu_z=mu_z, A=A, a=a)
        views.append(ViewEstimate(pose=pose, intrinsics=cam, params=params))
    return views


# --- direct maximum-likelihood fit -------------------------------------------


@dataclass
class FitResult:
    w: np.ndarray
    params: NormalizedParams
    loss: float
    converged: bool
    at_boundary: bool  # optimum wants a < 1, pinned at w1 = 0
    iterations: int = 0


def raw_from_params(nu_p, nu_z: float, B, a: float) -> np.ndarray:
    """Raw outputs producing the given parameters (B - 2I must be PSD, a >= 1)."""
    B = np.asarray(B, dtype=float)
    W = B - 2.0 * np.eye(2)
    if np.linalg.eigvalsh(W)[0] < -1e-12 or a < 1:
        raise DomainError("only parameters in the linear activation region are invertible here")
    w2 = a * (nu_z - 1.0) if nu_z >= 1 else a * (1.0 - 1.0 / nu_z)
    return np.array([W[0, 0], W[0, 1], W[1, 1], nu_p[0], nu_p[1], a - 1.0, w2])


def default_fit_init(obs: NormalizedObservation) -> np.ndarray:
    nu_z = float(np.exp(np.mean(np.log(obs.z_p))))
    center = np.median(obs.v_p, axis=0)
    return raw_from_params(2.0 * center, nu_z, 2.0 * np.eye(2), 1.0)


def fit_params(obs: NormalizedObservation, init=None, max_iter: int = 5000, grad_tol: float = 1e-9) -> FitResult:
    """Minimize the mean loss over observations in raw-output space, w1 >= 0."""
    if obs.z_p.ndim != 1 or len(obs) < 3:
        raise DomainError("fit_params needs a batch of at least 3 observations")
    lower = np.full(RAW_DIM, -np.inf)
    lower[5] = 0.0

    def objective(w):
        value, grad = loss_from_raw(w, obs)
        return float(np.mean(value)), grad.mean(axis=0)

    w0 = default_fit_init(obs) if init is None else np.asarray(init, dtype=float)
    res = minimize(objective, w0, lower=lower, grad_tol=grad_tol, max_iter=max_iter)
    at_boundary = bool(res.x[5] <= 0.0 and res.grad[5] > 0.0)
    return FitResult(
        w=res.x,
        params=activation(res.x),
        loss=res.fun,
        converged=res.converged,
        at_boundary=at_boundary,
        iterations=res.iterations,
    )


# --- calibration --------------------------------------------------------------


@dataclass
class CalibrationCurve:
    predicted: np.ndarray  # window means of predicted variance, non-decreasing
    empirical: np.ndarray  # window means of squared error

    def to_pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.predicted.tolist(), self.empirical.tolist()))


def window_bounds(n: int, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Start/stop of the centred window around each sorted index, truncated at the ends."""
    idx = np.arange(n)
    lo = np.clip(idx - window // 2, 0, n)
    hi = np.clip(idx - window // 2 + window, 0, n)
    return lo, hi


def calibration_curve(predicted_variance, squared_error, window: int = 200) -> CalibrationCurve:
    """Sort by predicted variance and low-pass both series over ``window`` neighbours.

    One point per sample, except that a window covering the whole data set
    collapses to a single point at the global means.
    """
    pv = np.asarray(predicted_variance, dtype=float).ravel()
    se = np.asarray(squared_error, dtype=float).ravel()
    if pv.size == 0 or pv.shape != se.shape:
        raise DomainError("need equally many (non-zero) predictions and errors")
    if window < 1:
        raise DomainError("window must be >= 1")
    if np.any(pv < 0) or np.any(se < 0):
        raise DomainError("variances and squared errors must be >= 0")
    n = pv.size
    order = np.lexsort((se, pv))  # ties broken by error so the result is permutation-invariant
    pv, se = pv[order], se[order]
    if window >= n:
        return CalibrationCurve(np.array([pv.mean()]), np.array([se.mean()]))
    lo, hi = window_bounds(n, window)
    cp = np.concatenate([[0.0], np.cumsum(pv)])
    ce = np.concatenate([[0.0], np.cumsum(se)])
    count = hi - lo
    predicted = (cp[hi] - cp[lo]) / count
    # Guard the cumulative-sum roundoff so the curve stays monotone.
    predicted = np.maximum.accumulate(predicted)
    return CalibrationCurve(predicted, (ce[hi] - ce[lo]) / count)
