"""Projected Huber distribution: density, sampling, normalized loss and multi-view fusion."""

from .distribution import DistParams, Moments, k_combined, log_pdf, mode, moments, nll_and_grad, sample
from .fusion import CameraPose, FusionResult, InfeasibleError, Plane, ViewEstimate, fuse, plane_mle
from .harness import ScenarioConfig, calibration_curve, fit_params, simulate_rig
from .mapping import (
    CameraIntrinsics,
    DatasetStats,
    NormalizedObservation,
    NormalizedParams,
    activation,
    compute_stats,
    loss,
    loss_from_raw,
    normalize_obs,
    normalized_to_world,
    stats_from_ranges,
)
from .special import DomainError, g1, log_norm_depth, scaled_gamma

__all__ = [
    "CameraIntrinsics",
    "CameraPose",
    "DatasetStats",
    "DistParams",
    "DomainError",
    "FusionResult",
    "InfeasibleError",
    "Moments",
    "NormalizedObservation",
    "NormalizedParams",
    "Plane",
    "ScenarioConfig",
    "ViewEstimate",
    "activation",
    "calibration_curve",
    "compute_stats",
    "fit_params",
    "fuse",
    "g1",
    "k_combined",
    "log_norm_depth",
    "log_pdf",
    "loss",
    "loss_from_raw",
    "mode",
    "moments",
    "nll_and_grad",
    "normalize_obs",
    "normalized_to_world",
    "plane_mle",
    "sample",
    "scaled_gamma",
    "simulate_rig",
    "stats_from_ranges",
]
