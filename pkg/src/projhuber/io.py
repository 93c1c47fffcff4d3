"""JSON codecs for the CLI.

Decoders raise :class:`MalformedInput` for anything structurally wrong
(missing keys, wrong shapes, non-numbers).  Values that parse but violate a
parameter constraint surface as :class:`~projhuber.special.DomainError`
from the dataclass constructors.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, fields

import numpy as np

from .distribution import DistParams
from .fusion import CameraPose, Plane, ViewEstimate
from .harness import ScenarioConfig
from .mapping import CameraIntrinsics, DatasetStats, NormalizedObservation, NormalizedParams


class MalformedInput(ValueError):
    """Input that cannot be decoded into the expected structure."""


def _require(obj: dict, key: str):
    if not isinstance(obj, dict):
        raise MalformedInput(f"expected a JSON object, got {type(obj).__name__}")
    if key not in obj:
        raise MalformedInput(f"missing key {key!r}")
    return obj[key]


def number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedInput(f"{name} must be a number")
    return float(value)


def array(value, shape: tuple, name: str) -> np.ndarray:
    """Numeric array of a given shape; ``None`` in ``shape`` means any length."""
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"{name} must be numeric") from exc
    if arr.ndim != len(shape) or any(s is not None and s != n for s, n in zip(shape, arr.shape)):
        raise MalformedInput(f"{name} must have shape {shape}, got {arr.shape}")
    if _has_bool(value):
        raise MalformedInput(f"{name} must be numeric")
    return arr


def _has_bool(value) -> bool:
    if isinstance(value, bool):
        return True
    if isinstance(value, (list, tuple)):
        return any(_has_bool(v) for v in value)
    return False


def symmetric_2x2(value, name: str) -> np.ndarray:
    m = array(value, (2, 2), name)
    if m[0, 1] != m[1, 0]:
        raise MalformedInput(f"{name} must list equal off-diagonal entries")
    return m


def encode_float(x: float):
    """Finite floats pass through (shortest round-trip repr); others become strings."""
    x = float(x)
    return x if math.isfinite(x) else str(x)


def encode(obj):
    if isinstance(obj, dict):
        return {k: encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return encode(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return encode_float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(encode(obj), allow_nan=False)


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from exc


# --- distribution parameters ------------------------------------------------------


def dist_params_from_json(obj) -> DistParams:
    mu = array(_require(obj, "mu"), (3,), "mu")
    A = symmetric_2x2(_require(obj, "A"), "A")
    a = number(_require(obj, "a"), "a")
    return DistParams(mu_x=mu[0], mu_y=mu[1], mu_z=mu[2], A=A, a=a)


def dist_params_to_json(p: DistParams) -> dict:
    return {"mu": [p.mu_x, p.mu_y, p.mu_z], "A": p.A, "a": p.a}


def stats_from_json(obj) -> DatasetStats:
    return DatasetStats(mu_z0=number(_require(obj, "mu_z0"), "mu_z0"), D=number(_require(obj, "D"), "D"))


def stats_to_json(s: DatasetStats) -> dict:
    return {"mu_z0": s.mu_z0, "D": s.D}


def raw_from_json(obj) -> np.ndarray:
    return array(_require(obj, "w"), (7,), "w")


def normalized_params_from_json(obj) -> NormalizedParams:
    return NormalizedParams(
        nu_p=array(_require(obj, "nu_p"), (2,), "nu_p"),
        nu_z=number(_require(obj, "nu_z"), "nu_z"),
        B=symmetric_2x2(_require(obj, "B"), "B"),
        a=number(_require(obj, "a"), "a"),
    )


def normalized_params_to_json(p: NormalizedParams) -> dict:
    return {"nu_p": p.nu_p, "nu_z": p.nu_z, "B": p.B, "a": p.a}


def observations_from_json(obj) -> NormalizedObservation:
    """Either ``{"v_p": [[..], ..], "z_p": [..]}`` or a list of ``{"v_p", "z_p"}`` records."""
    if isinstance(obj, list):
        if not obj:
            raise MalformedInput("observations must not be empty")
        v_p = array([_require(o, "v_p") for o in obj], (None, 2), "v_p")
        z_p = array([_require(o, "z_p") for o in obj], (None,), "z_p")
    else:
        v_p = array(_require(obj, "v_p"), (None, 2), "v_p")
        z_p = array(_require(obj, "z_p"), (None,), "z_p")
        if len(v_p) != len(z_p):
            raise MalformedInput("v_p and z_p must have the same length")
    return NormalizedObservation(v_p, z_p)


# --- fusion ---------------------------------------------------------------------------


def view_from_json(obj) -> ViewEstimate:
    pose = CameraPose(R=array(_require(obj, "R"), (3, 3), "R"), t=array(_require(obj, "t"), (3,), "t"))
    cam = CameraIntrinsics(f=number(_require(obj, "f"), "f"), S=number(_require(obj, "S"), "S"))
    return ViewEstimate(pose=pose, intrinsics=cam, params=dist_params_from_json(_require(obj, "params")))


def view_to_json(v: ViewEstimate) -> dict:
    return {
        "R": v.pose.R,
        "t": v.pose.t,
        "f": v.intrinsics.f,
        "S": v.intrinsics.S,
        "params": dist_params_to_json(v.params),
    }


def views_from_json(obj) -> list[ViewEstimate]:
    if not isinstance(obj, list) or not obj:
        raise MalformedInput("views must be a non-empty list")
    return [view_from_json(v) for v in obj]


def plane_from_json(obj) -> Plane:
    return Plane(d=array(_require(obj, "d"), (3,), "d"), c=number(_require(obj, "c"), "c"))


# --- scenario ---------------------------------------------------------------------------


def scenario_from_json(obj) -> ScenarioConfig:
    if not isinstance(obj, dict):
        raise MalformedInput("scenario must be a JSON object")
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = set(obj) - known
    if unknown:
        raise MalformedInput(f"unknown scenario keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in obj.items():
        if key in ("n_views", "seed"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise MalformedInput(f"{key} must be an integer")
            kwargs[key] = value
        elif key == "truth":
            kwargs[key] = tuple(array(value, (3,), key).tolist())
        elif key in ("precision_range", "a_range"):
            kwargs[key] = tuple(array(value, (2,), key).tolist())
        else:
            kwargs[key] = number(value, key)
    return ScenarioConfig(**kwargs)


def scenario_to_json(cfg: ScenarioConfig) -> dict:
    return asdict(cfg)
