"""Tool tracking and motion-based surgical skill assessment."""

__version__ = "0.1.0"

from .association import (
    AssociationConfig,
    AssignmentResult,
    CostMatrix,
    appearance_distance,
    build_cost_matrix,
    gate_assignments,
    hungarian,
)
from .data_model import (
    Detection,
    SequenceMeta,
    SkillLabel,
    TrackRecord,
    binarize_label,
    read_detections,
    read_labels,
    read_tracks,
    write_detections,
    write_tracks,
)
from .kalman import KalmanConfig, KalmanState, kf_init, kf_predict, kf_update
from .mot_eval import MotSummary, evaluate, match_frame, summarize
from .motion_features import (
    MotionFeatureVector,
    TrajectorySeries,
    compute_features,
    sample_window,
    select_main_track,
    to_series,
)
from .scenario_sim import ScenarioSpec, generate, read_scenario, scenario_from_dict
from .skill_rf import EvalReport, ForestConfig, cross_validate, predict, train_forest
from .track_engine import Tracker, TrackerConfig, TrackStatus, run

__all__ = [
    "__version__",
    "AssociationConfig", "AssignmentResult", "CostMatrix",
    "appearance_distance", "build_cost_matrix", "gate_assignments", "hungarian",
    "Detection", "SequenceMeta", "SkillLabel", "TrackRecord", "binarize_label",
    "read_detections", "read_labels", "read_tracks", "write_detections", "write_tracks",
    "KalmanConfig", "KalmanState", "kf_init", "kf_predict", "kf_update",
    "MotSummary", "evaluate", "match_frame", "summarize",
    "MotionFeatureVector", "TrajectorySeries", "compute_features",
    "sample_window", "select_main_track", "to_series",
    "ScenarioSpec", "generate", "read_scenario", "scenario_from_dict",
    "EvalReport", "ForestConfig", "cross_validate", "predict", "train_forest",
    "Tracker", "TrackerConfig", "TrackStatus", "run",
]
