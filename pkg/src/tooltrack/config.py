"""Flat key/value configuration file (JSON) for the whole pipeline.

One file covers tracker, forest, and feature parameters. Unknown keys are a
hard error so typos cannot silently fall back to defaults. Keys set to null
mean "resolve from sequence metadata" where supported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .association import AssociationConfig
from .errors import ConfigError, ParseError
from .kalman import KalmanConfig
from .skill_rf import ForestConfig
from .track_engine import TrackerConfig


@dataclass(frozen=True)
class FeatureParams:
    gap_fill_max: int = 5
    min_motion_speed: float | None = None  # px/s; None -> 2% of diagonal per second


@dataclass(frozen=True)
class AppConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    features: FeatureParams = field(default_factory=FeatureParams)
    cv_folds: int = 5
    n_permutations: int = 10_000

    def to_dict(self) -> dict:
        a, k, t = self.tracker.association, self.tracker.kalman, self.tracker
        return {
            "mismatch_penalty": a.mismatch_penalty,
            "spatial_gate_px": a.spatial_gate_px,
            "gallery_size": a.gallery_size,
            "min_confidence": a.min_confidence,
            "class_gating": a.class_gating,
            "meas_position_std_scale": k.meas_position_std_scale,
            "meas_area_std_scale": k.meas_area_std_scale,
            "meas_aspect_std": k.meas_aspect_std,
            "process_position_std": k.process_position_std,
            "process_area_std_scale": k.process_area_std_scale,
            "process_aspect_std": k.process_aspect_std,
            "velocity_noise_scale": k.velocity_noise_scale,
            "init_position_std_scale": k.init_position_std_scale,
            "init_velocity_var_scale": k.init_velocity_var_scale,
            "max_inactive_frames": t.max_inactive_frames,
            "recovery_gate_growth": t.recovery_gate_growth,
            "recovery_max_distance": t.recovery_max_distance,
            "n_trees": self.forest.n_trees,
            "max_depth": self.forest.max_depth,
            "features_per_split": self.forest.features_per_split,
            "min_leaf": self.forest.min_leaf,
            "rng_seed": self.forest.rng_seed,
            "cv_folds": self.cv_folds,
            "n_permutations": self.n_permutations,
            "gap_fill_max": self.features.gap_fill_max,
            "min_motion_speed": self.features.min_motion_speed,
        }


_INT_KEYS = {
    "gallery_size", "max_inactive_frames", "n_trees", "max_depth",
    "features_per_split", "min_leaf", "rng_seed", "cv_folds",
    "n_permutations", "gap_fill_max",
}
_BOOL_KEYS = {"class_gating"}
_NULLABLE_KEYS = {
    "spatial_gate_px", "process_position_std", "max_depth",
    "features_per_split", "min_motion_speed",
}
_KNOWN_KEYS = set(AppConfig().to_dict())


def config_from_dict(obj: dict) -> AppConfig:
    unknown = sorted(set(obj) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = AppConfig().to_dict()
    for key, raw in obj.items():
        if raw is None:
            if key not in _NULLABLE_KEYS:
                raise ConfigError(f"config key {key!r} must not be null")
            values[key] = None
        elif key in _BOOL_KEYS:
            if not isinstance(raw, bool):
                raise ConfigError(f"config key {key!r} must be a boolean")
            values[key] = raw
        elif key in _INT_KEYS:
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ConfigError(f"config key {key!r} must be an integer")
            values[key] = raw
        else:
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise ConfigError(f"config key {key!r} must be a number")
            values[key] = float(raw)

    association = AssociationConfig(
        mismatch_penalty=values["mismatch_penalty"],
        spatial_gate_px=values["spatial_gate_px"],
        gallery_size=values["gallery_size"],
        min_confidence=values["min_confidence"],
        class_gating=values["class_gating"],
    )
    kalman = KalmanConfig(
        meas_position_std_scale=values["meas_position_std_scale"],
        meas_area_std_scale=values["meas_area_std_scale"],
        meas_aspect_std=values["meas_aspect_std"],
        process_position_std=values["process_position_std"],
        process_area_std_scale=values["process_area_std_scale"],
        process_aspect_std=values["process_aspect_std"],
        velocity_noise_scale=values["velocity_noise_scale"],
        init_position_std_scale=values["init_position_std_scale"],
        init_velocity_var_scale=values["init_velocity_var_scale"],
    )
    tracker = TrackerConfig(
        association=association,
        kalman=kalman,
        max_inactive_frames=values["max_inactive_frames"],
        recovery_gate_growth=values["recovery_gate_growth"],
        recovery_max_distance=values["recovery_max_distance"],
    )
    forest = ForestConfig(
        n_trees=values["n_trees"],
        max_depth=values["max_depth"],
        features_per_split=values["features_per_split"],
        min_leaf=values["min_leaf"],
        rng_seed=values["rng_seed"],
    )
    features = FeatureParams(
        gap_fill_max=values["gap_fill_max"],
        min_motion_speed=values["min_motion_speed"],
    )
    return AppConfig(
        tracker=tracker,
        forest=forest,
        features=features,
        cv_folds=values["cv_folds"],
        n_permutations=values["n_permutations"],
    )


def load_config(path) -> AppConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: bad JSON: {e}") from e
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a flat JSON object")
    return config_from_dict(obj)
