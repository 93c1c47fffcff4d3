"""Focal-length-aware basis change, raw-output activation and the NLL loss.

Ground truth points are mapped to a normalized basis

    v_p = 2 f (x, y) / (z S),   z_p = z / (mu_z0 f)

in which a network predicts ``(nu_p, nu_z, B, a)``.  The loss

    h(||B v_p - nu_p|| z_p) - log|B| + a max(z_p/nu_z, nu_z/z_p) + log K(a) + log nu_z

equals the world-frame negative log density up to a constant that depends
only on the camera and dataset statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .distribution import LOG_K_HUBER, DistParams
from .special import DomainError, huber, log_norm_depth

RAW_DIM = 7
# exp() of anything below this underflows to a subnormal; clamp so a > 0 stays true.
MIN_EXPONENT = -700.0


@dataclass(frozen=True)
class CameraIntrinsics:
    f: float  # focal length, pixels
    S: float  # sensor side, pixels

    def __post_init__(self):
        if not (self.f > 0 and self.S > 0):
            raise DomainError(f"intrinsics must be positive, got f={self.f}, S={self.S}")


@dataclass(frozen=True)
class DatasetStats:
    mu_z0: float
    D: float

    def __post_init__(self):
        if not self.mu_z0 > 0:
            raise DomainError(f"mu_z0 must be > 0, got {self.mu_z0}")
        if not self.D >= 1:
            raise DomainError(f"D must be >= 1, got {self.D}")


@dataclass(frozen=True)
class NormalizedObservation:
    """A ground-truth point (or a batch of them) in the normalized basis."""

    v_p: np.ndarray
    z_p: np.ndarray

    def __post_init__(self):
        v_p = np.asarray(self.v_p, dtype=float)
        z_p = np.asarray(self.z_p, dtype=float)
        if v_p.shape[-1:] != (2,) or v_p.shape[:-1] != z_p.shape:
            raise DomainError(f"shape mismatch: v_p {v_p.shape}, z_p {z_p.shape}")
        if not np.all(z_p > 0):
            raise DomainError("z_p must be > 0")
        object.__setattr__(self, "v_p", v_p)
        object.__setattr__(self, "z_p", z_p)

    def __len__(self):
        return 1 if self.z_p.ndim == 0 else len(self.z_p)


@dataclass(frozen=True)
class NormalizedParams:
    nu_p: np.ndarray
    nu_z: float
    B: np.ndarray = field(repr=False)
    a: float

    def __post_init__(self):
        nu_p = np.asarray(self.nu_p, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if nu_p.shape != (2,) or B.shape != (2, 2):
            raise DomainError("nu_p must have shape (2,) and B shape (2, 2)")
        if not (self.nu_z > 0 and self.a > 0):
            raise DomainError(f"nu_z and a must be > 0, got nu_z={self.nu_z}, a={self.a}")
        if not np.allclose(B, B.T, rtol=1e-12, atol=0.0):
            raise DomainError("B must be symmetric")
        lam = np.linalg.eigvalsh(B)
        # eigvalsh is accurate to ~eps * |B|, so B = I + (tiny) may report 1 - O(eps * lam_max).
        if not lam[0] >= 1.0 - 8.0 * np.finfo(float).eps * max(1.0, lam[1]):
            raise DomainError("B must have eigenvalues > 1")
        object.__setattr__(self, "nu_p", nu_p)
        object.__setattr__(self, "B", B)

    @property
    def mode(self) -> tuple[np.ndarray, float]:
        """Normalized-basis mode ``(B^-1 nu_p, nu_z)``."""
        return np.linalg.solve(self.B, self.nu_p), self.nu_z


def compute_stats(samples: Iterable[tuple[float, float]]) -> DatasetStats:
    """Dataset constants from ``(z, f)`` pairs: geometric centre and half-range of z/f."""
    pairs = np.asarray(list(samples), dtype=float)
    if pairs.size == 0:
        raise DomainError("compute_stats needs at least one sample")
    pairs = pairs.reshape(-1, 2)
    if np.any(pairs <= 0) or not np.all(np.isfinite(pairs)):
        raise DomainError("z and f must be finite and > 0")
    ratio = pairs[:, 0] / pairs[:, 1]
    hi, lo = ratio.max(), ratio.min()
    return DatasetStats(mu_z0=math.sqrt(hi * lo), D=max(1.0, math.sqrt(hi / lo)))


def stats_from_ranges(z_range: tuple[float, float], f_range: tuple[float, float]) -> DatasetStats:
    """Dataset constants from known depth and focal-length ranges."""
    (z_lo, z_hi), (f_lo, f_hi) = z_range, f_range
    return compute_stats([(z_hi, f_lo), (z_lo, f_hi)])


def normalize_obs(v, cam: CameraIntrinsics, stats: DatasetStats) -> NormalizedObservation:
    pts = np.asarray(v, dtype=float)
    z = pts[..., 2]
    if not np.all(z > 0):
        raise DomainError("points must have z > 0")
    v_p = 2.0 * cam.f * pts[..., :2] / (z[..., None] * cam.S)
    return NormalizedObservation(v_p=v_p, z_p=z / (stats.mu_z0 * cam.f))


def denormalize_obs(obs: NormalizedObservation, cam: CameraIntrinsics, stats: DatasetStats) -> np.ndarray:
    z = obs.z_p * stats.mu_z0 * cam.f
    xy = obs.v_p * (z * cam.S / (2.0 * cam.f))[..., None]
    return np.concatenate([xy, z[..., None]], axis=-1)


# --- activation -------------------------------------------------------------


def positive_map(w):
    """``exp(w)`` for w < 0, ``w + 1`` otherwise; returns (value, derivative).

    Continuous with continuous derivative at 0 and 1-Lipschitz.
    """
    w = np.asarray(w, dtype=float)
    neg = w < 0
    e = np.exp(np.clip(w, MIN_EXPONENT, 0.0))
    value = np.where(neg, e, w + 1.0)
    deriv = np.where(neg, np.where(w > MIN_EXPONENT, e, 0.0), 1.0)
    return value, deriv


def _raw_to_sym(w_b: np.ndarray) -> np.ndarray:
    return np.stack(
        [np.stack([w_b[..., 0], w_b[..., 1]], -1), np.stack([w_b[..., 1], w_b[..., 2]], -1)], -2
    )


def spd_map(w_b):
    """B = I + phi(W) for the symmetric W built from 3 raw numbers.

    ``phi`` is :func:`positive_map` applied to the eigenvalues of W, so
    eigmin(B) > 1 always and B = W + 2I (affine in w) whenever W is PSD.
    Returns ``(B, eigvals, eigvecs, phi_vals, phi_derivs)``; the extra pieces
    feed :func:`spd_map_vjp`.
    """
    W = _raw_to_sym(np.asarray(w_b, dtype=float))
    lam, V = np.linalg.eigh(W)
    phi, dphi = positive_map(lam)
    B = np.eye(2) + (V * phi[..., None, :]) @ np.swapaxes(V, -1, -2)
    B = 0.5 * (B + np.swapaxes(B, -1, -2))
    return B, lam, V, phi, dphi


def spd_map_vjp(grad_B: np.ndarray, lam, V, phi, dphi) -> np.ndarray:
    """Pull a gradient w.r.t. B back to the 3 raw inputs (Daleckii-Krein)."""
    diff = lam[..., :, None] - lam[..., None, :]
    close = np.abs(diff) <= 1e-9 * (1.0 + np.abs(lam[..., :, None]))
    safe = np.where(close, 1.0, diff)
    avg_dphi = 0.5 * (dphi[..., :, None] + dphi[..., None, :])
    Phi = np.where(close, avg_dphi, (phi[..., :, None] - phi[..., None, :]) / safe)
    Vt = np.swapaxes(V, -1, -2)
    G = V @ (Phi * (Vt @ grad_B @ V)) @ Vt
    return np.stack([G[..., 0, 0], G[..., 0, 1] + G[..., 1, 0], G[..., 1, 1]], axis=-1)


def nu_z_map(w1, w2):
    """(a, nu_z) from the two depth outputs, with partials of nu_z."""
    a, da_dw1 = positive_map(w1)
    w2 = np.asarray(w2, dtype=float)
    pos = w2 > 0
    denom = np.where(pos, 1.0, a - w2)
    # Each branch is evaluated everywhere; the unused one may overflow for tiny a.
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        nu_z = np.where(pos, 1.0 + w2 / a, a / denom)
        dnu_dw2 = np.where(pos, 1.0 / a, a / denom**2)
        dnu_da = np.where(pos, -w2 / a**2, -w2 / denom**2)
    return a, da_dw1, nu_z, dnu_dw2, dnu_da


def activation(w) -> NormalizedParams:
    """Raw 7-vector ``(w_B[3], w_nu[2], w1, w2)`` to valid normalized parameters."""
    w = np.asarray(w, dtype=float)
    if w.shape != (RAW_DIM,) or not np.all(np.isfinite(w)):
        raise DomainError(f"raw output must be {RAW_DIM} finite reals")
    B = spd_map(w[:3])[0]
    a, _, nu_z, _, _ = nu_z_map(w[5], w[6])
    return NormalizedParams(nu_p=w[3:5].copy(), nu_z=float(nu_z), B=B, a=float(a))


# --- world <-> normalized parameters ---------------------------------------


def normalized_to_world(params: NormalizedParams, cam: CameraIntrinsics, stats: DatasetStats) -> DistParams:
    """World-frame distribution whose NLL matches :func:`loss` up to a constant.

    The constant is :func:`world_nll_offset` and involves only ``cam`` and
    ``stats``.
    """
    scale = 2.0 * cam.f / cam.S  # v_p = scale * (x/z, y/z)
    mu_p = np.linalg.solve(params.B, params.nu_p) / scale
    A = params.B * (params.nu_z * scale)
    return DistParams(
        mu_x=float(mu_p[0]),
        mu_y=float(mu_p[1]),
        mu_z=params.nu_z * stats.mu_z0 * cam.f,
        A=0.5 * (A + A.T),
        a=params.a,
    )


def world_to_normalized(params: DistParams, cam: CameraIntrinsics, stats: DatasetStats) -> NormalizedParams:
    scale = 2.0 * cam.f / cam.S
    nu_z = params.mu_z / (stats.mu_z0 * cam.f)
    B = params.A / (nu_z * scale)
    return NormalizedParams(nu_p=B @ params.mu_p * scale, nu_z=nu_z, B=B, a=params.a)


def world_nll_offset(cam: CameraIntrinsics, stats: DatasetStats) -> float:
    """``-log p(v) - loss(...)`` for any parameters and any v with z > 0."""
    return 3.0 * math.log(stats.mu_z0 * cam.f) - 2.0 * math.log(2.0 * cam.f / cam.S) + LOG_K_HUBER


# --- loss ---------------------------------------------------------------------


@dataclass(frozen=True)
class LossGrad:
    nu_p: np.ndarray
    nu_z: np.ndarray
    B: np.ndarray  # w.r.t. each of the 4 entries of B treated independently
    a: np.ndarray


def _loss_parts(nu_p, nu_z, B, a, v_p, z_p):
    e = np.einsum("...ij,...j->...i", B, v_p) - nu_p
    norm_e = np.linalg.norm(e, axis=-1)
    h, dh = huber(norm_e * z_p)
    sign, logdet = np.linalg.slogdet(B)
    if np.any(sign <= 0):
        raise DomainError("B must have positive determinant")
    ratio = z_p / nu_z
    upper = ratio >= 1.0  # ties go to the z_p/nu_z branch
    reg = a * np.where(upper, ratio, 1.0 / ratio)
    lnd, dlnd = log_norm_depth(a)
    value = h - logdet + reg + lnd + np.log(nu_z)

    unit = np.where(norm_e[..., None] > 0, e / np.where(norm_e > 0, norm_e, 1.0)[..., None], 0.0)
    g_e = (dh * z_p)[..., None] * unit
    g_B = g_e[..., :, None] * v_p[..., None, :] - np.swapaxes(np.linalg.inv(B), -1, -2)
    g_nu_z = np.where(upper, -a * z_p / nu_z**2, a / z_p) + 1.0 / nu_z
    g_a = np.where(upper, ratio, 1.0 / ratio) + dlnd
    return value, LossGrad(nu_p=-g_e, nu_z=g_nu_z, B=g_B, a=g_a)


def loss(params: NormalizedParams, obs: NormalizedObservation):
    """Normalized-basis NLL and its gradient w.r.t. ``(nu_p, nu_z, B, a)``.

    Batched observations give batched values and gradients.
    """
    value, grad = _loss_parts(params.nu_p, params.nu_z, params.B, params.a, obs.v_p, obs.z_p)
    if np.ndim(value) == 0:
        return float(value), grad
    return value, grad


def loss_from_raw(w, obs: NormalizedObservation):
    """Loss as a function of the raw 7-vector, with the full gradient in ``w``.

    ``w`` may be a single ``(7,)`` vector or a batch ``(..., 7)`` aligned with
    the observations.
    """
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != RAW_DIM or not np.all(np.isfinite(w)):
        raise DomainError(f"raw output must be {RAW_DIM} finite reals")
    B, lam, V, phi, dphi = spd_map(w[..., :3])
    nu_p = w[..., 3:5]
    a, da_dw1, nu_z, dnu_dw2, dnu_da = nu_z_map(w[..., 5], w[..., 6])
    value, g = _loss_parts(nu_p, nu_z, B, a, obs.v_p, obs.z_p)

    batch = np.broadcast_shapes(np.shape(value), w.shape[:-1])
    grad = np.empty(batch + (RAW_DIM,))
    grad[..., :3] = spd_map_vjp(g.B, lam, V, phi, dphi)
    grad[..., 3:5] = g.nu_p
    grad[..., 5] = (g.a + g.nu_z * dnu_da) * da_dw1
    grad[..., 6] = g.nu_z * dnu_dw2
    if np.ndim(value) == 0:
        return float(value), grad
    return value, grad


def depth_regression_term(w1, w2, z_p):
    """``a max(z_p/nu_z, nu_z/z_p)`` as a function of the raw depth outputs.

    Returns ``(value, grad_a_w2, grad_w1_w2, linear_branch)`` where
    ``linear_branch`` marks the branch that is linear in ``(a, w2)``:
    ``nu_z/z_p`` for w2 > 0 and ``z_p/nu_z`` for w2 <= 0.
    """
    a, da_dw1, nu_z, dnu_dw2, dnu_da = nu_z_map(w1, w2)
    z_p = np.asarray(z_p, dtype=float)
    ratio = z_p / nu_z
    upper = ratio >= 1.0
    value = a * np.where(upper, ratio, 1.0 / ratio)
    d_nu = np.where(upper, -a * z_p / nu_z**2, a / z_p)
    d_a = np.where(upper, ratio, 1.0 / ratio) + d_nu * dnu_da
    d_w2 = d_nu * dnu_dw2
    grad_a = np.stack([d_a, d_w2], axis=-1)
    grad_w = np.stack([d_a * da_dw1, d_w2], axis=-1)
    linear = np.where(np.asarray(w2) > 0, ~upper, upper)
    return value, grad_a, grad_w, linear
