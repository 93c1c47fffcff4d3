"""Projected Huber distribution over 3D points in a camera frame.

The density factors into a depth part ``exp(-a max(z/mu_z, mu_z/z))`` and a
projected part ``exp(-h(||A (x/z - mu_x, y/z - mu_y)|| z / mu_z))`` where ``h``
is the unit Huber function.  Its negative log is convex in ``(x, y, z)`` on
``z > 0`` and the density is exactly zero for ``z <= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import lambertw

from .special import DomainError, g1, huber, log_norm_depth, scaled_gamma

HUBER_MASS = 1.0 + math.exp(-0.5)  # int_0^inf r exp(-h(r)) dr
HUBER_INNER_MASS = 1.0 - math.exp(-0.5)  # the r <= 1 part of HUBER_MASS
LOG_K_HUBER = math.log(2.0 * math.pi * HUBER_MASS)
# E[r^3] / (2 E[r]) under r exp(-h(r)): int_0^1 r^3 e^{-r^2/2} = 2 - 3e^{-1/2},
# int_1^inf r^3 e^{-r+1/2} = 16 e^{-1/2}.
PROJ_VAR_FACTOR = (2.0 + 13.0 * math.exp(-0.5)) / (2.0 + 2.0 * math.exp(-0.5))


@dataclass(frozen=True)
class DistParams:
    """World-basis parameters: projected mean, depth scale, precision, concentration."""

    mu_x: float
    mu_y: float
    mu_z: float
    A: np.ndarray = field(repr=False)
    a: float

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.shape != (2, 2):
            raise DomainError(f"A must be 2x2, got shape {A.shape}")
        if not np.all(np.isfinite(A)) or not np.allclose(A, A.T, rtol=1e-12, atol=0.0):
            raise DomainError("A must be finite and symmetric")
        A = 0.5 * (A + A.T)
        if np.linalg.eigvalsh(A)[0] <= 0:
            raise DomainError("A must be positive definite")
        if not (self.mu_z > 0 and math.isfinite(self.mu_z)):
            raise DomainError(f"mu_z must be > 0, got {self.mu_z}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise DomainError(f"a must be > 0, got {self.a}")
        if not (math.isfinite(self.mu_x) and math.isfinite(self.mu_y)):
            raise DomainError("mu_x, mu_y must be finite")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def mu_p(self) -> np.ndarray:
        return np.array([self.mu_x, self.mu_y])

    def replace(self, **changes) -> "DistParams":
        fields = dict(mu_x=self.mu_x, mu_y=self.mu_y, mu_z=self.mu_z, A=self.A, a=self.a)
        fields.update(changes)
        return DistParams(**fields)


def k_combined(params: DistParams) -> tuple[float, float, float]:
    """Normalizers ``(K_depth, K_proj, K_depth * K_proj)``."""
    mu_z, a = params.mu_z, params.a
    k_depth = mu_z * math.exp(log_norm_depth(a)[0])
    k_proj = mu_z**2 / np.linalg.det(params.A) * 2.0 * math.pi * HUBER_MASS
    return k_depth, float(k_proj), k_depth * float(k_proj)


def log_k_combined(params: DistParams) -> float:
    """log K_combined, assembled in log space so large ``a`` cannot underflow."""
    return (
        3.0 * math.log(params.mu_z)
        + log_norm_depth(params.a)[0]
        - math.log(np.linalg.det(params.A))
        + LOG_K_HUBER
    )


def _as_points(v) -> np.ndarray:
    pts = np.asarray(v, dtype=float)
    if pts.shape[-1] != 3:
        raise DomainError(f"points must have 3 coordinates, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DomainError("points must be finite")
    return pts


def _unnormalized_nll(pts: np.ndarray, params: DistParams, with_grad: bool):
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    front = z > 0
    zs = np.where(front, z, 1.0)
    # q = A (x - z mu_x, y - z mu_y) / mu_z; the Huber argument is ||q||
    d = np.stack([x - zs * params.mu_x, y - zs * params.mu_y], axis=-1)
    q = d @ params.A / params.mu_z
    r = np.linalg.norm(q, axis=-1)
    h, dh = huber(r)
    u = zs / params.mu_z
    upper = u >= 1.0
    depth = params.a * np.where(upper, u, 1.0 / u)
    nll = np.where(front, h + depth, np.inf)
    if not with_grad:
        return nll, None
    # d||q||/dd = A q / (||q|| mu_z); chain through d = J v, J = [[1,0,-mu_x],[0,1,-mu_y]]
    scale = np.where(r > 0, dh / np.where(r > 0, r, 1.0), 0.0) / params.mu_z
    gd = (q @ params.A) * scale[..., None]
    dz_depth = np.where(upper, params.a / params.mu_z, -params.a * params.mu_z / (zs * zs))
    grad = np.stack(
        [gd[..., 0], gd[..., 1], -params.mu_x * gd[..., 0] - params.mu_y * gd[..., 1] + dz_depth],
        axis=-1,
    )
    grad = np.where(front[..., None], grad, np.nan)
    return nll, grad


def log_pdf(v, params: DistParams):
    """Log density at one point ``(3,)`` or a batch ``(..., 3)``; ``-inf`` for z <= 0."""
    pts = _as_points(v)
    nll, _ = _unnormalized_nll(pts, params, with_grad=False)
    out = -nll - log_k_combined(params)
    return float(out) if out.ndim == 0 else out


def nll_and_grad(v, params: DistParams):
    """Negative log density and its gradient in ``v``.

    At the Huber and depth kinks one valid subgradient is returned.  For
    ``z <= 0`` the value is ``+inf`` and the gradient is NaN.
    """
    pts = _as_points(v)
    nll, grad = _unnormalized_nll(pts, params, with_grad=True)
    nll = nll + log_k_combined(params)
    if nll.ndim == 0:
        return float(nll), grad
    return nll, grad


def mode(params: DistParams) -> np.ndarray:
    """Point predictor ``mu_z * (mu_x, mu_y, 1)``; also the NLL minimizer."""
    return params.mu_z * np.array([params.mu_x, params.mu_y, 1.0])


@dataclass(frozen=True)
class Moments:
    mean_proj: np.ndarray
    var_proj: np.ndarray
    mean_depth: float
    var_depth: float


def depth_moment_ratios(a: float) -> tuple[float, float]:
    """E[z]/mu_z and E[z^2]/mu_z^2 of the depth component."""
    denom = 1.0 + g1(a)
    m1 = (scaled_gamma(2, a) + scaled_gamma(-2, a)) / denom
    m2 = (scaled_gamma(3, a) + scaled_gamma(-3, a)) / denom
    return m1, m2


def moments(params: DistParams) -> Moments:
    a_inv = np.linalg.inv(params.A)
    m1, m2 = depth_moment_ratios(params.a)
    return Moments(
        mean_proj=params.mu_p,
        var_proj=a_inv @ a_inv * PROJ_VAR_FACTOR,
        mean_depth=params.mu_z * m1,
        var_depth=params.mu_z**2 * (m2 - m1 * m1),
    )


def _invert_lower_depth_tail(a: float, log_v: np.ndarray, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Solve Gamma(-1, x) = v * Gamma(-1, a) for x >= a, elementwise.

    log Gamma(-1, x) is convex and decreasing in x with slope -1/g1(x), so
    Newton started at x = a climbs monotonically to the root.
    """
    log_target = math.log(g1(a)) - a - 2.0 * math.log(a) + log_v
    x = np.full_like(log_v, a)
    active = np.ones(log_v.shape, dtype=bool)
    for _ in range(max_iter):
        xa = x[active]
        ga = g1(xa)
        phi = np.log(ga) - xa - 2.0 * np.log(xa) - log_target[active]
        x[active] = xa + ga * phi
        done = np.abs(phi) < tol
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            break
    return x


def sample_depth_ratio(a: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw z / mu_z from the depth component by inverse CDF on log(z/mu_z)."""
    g = g1(a)
    lower = rng.random(n) < g / (1.0 + g)
    log_v = np.log1p(-rng.random(n))  # log of a uniform on (0, 1]
    t = np.empty(n)
    # Upper tail: P(z/mu_z > t) = exp(-a (t - 1)) for t >= 1.
    t[~lower] = 1.0 - log_v[~lower] / a
    if lower.any():
        t[lower] = a / _invert_lower_depth_tail(a, log_v[lower])
    return t


def sample_huber_radius(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw r with density proportional to r exp(-h(r))."""
    w = rng.random(n) * HUBER_MASS
    inner = w < HUBER_INNER_MASS
    r = np.empty(n)
    r[inner] = np.sqrt(-2.0 * np.log1p(-w[inner]))
    # Outer tail mass beyond r is (r + 1) exp(-r + 1/2).
    tail = HUBER_MASS - w[~inner]
    r[~inner] = -np.real(lambertw(-tail * math.exp(-1.5), k=-1)) - 1.0
    return r


def sample(params: DistParams, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. draws as an ``(n, 3)`` array; deterministic given ``seed``."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    rng = np.random.default_rng(seed)
    z = params.mu_z * sample_depth_ratio(params.a, n, rng)
    r = sample_huber_radius(n, rng)
    theta = rng.random(n) * 2.0 * math.pi
    q = r[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    proj = params.mu_p + (params.mu_z / z)[:, None] * np.linalg.solve(params.A, q.T).T
    return np.column_stack([proj * z[:, None], z])
