"""Constant-velocity Kalman filter over (cx, cy, area, aspect) box states.

State vector: (cx, cy, a, r, v_cx, v_cy, v_a, v_r) where a = w*h in px^2 and
r = w/h. The filter supplies the predicted box center used by the spatial
gate during association. Time is measured in frames; noise defaults are
scale-relative (fractions of bbox scale / image diagonal) so behavior is
resolution-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data_model import Detection
from .errors import EstimationError, ValidationError

_DIM = 8
_F = np.eye(_DIM)
_F[0, 4] = _F[1, 5] = _F[2, 6] = _F[3, 7] = 1.0
_H = np.zeros((4, _DIM))
_H[0, 0] = _H[1, 1] = _H[2, 2] = _H[3, 3] = 1.0


@dataclass(frozen=True)
class KalmanConfig:
    """Noise configuration. None fields are resolved from sequence metadata."""

    meas_position_std_scale: float = 0.05   # x sqrt(area)
    meas_area_std_scale: float = 0.05       # x area
    meas_aspect_std: float = 0.05
    process_position_std: float | None = None  # px/frame; None -> diagonal/160
    process_area_std_scale: float = 0.02    # x area, per frame
    process_aspect_std: float = 0.002       # per frame
    velocity_noise_scale: float = 0.5       # velocity stds = scale x position stds
    init_position_std_scale: float = 2.0    # x measurement stds
    init_velocity_var_scale: float = 10.0   # x corresponding position variance

    def resolved(self, image_diagonal: float) -> "KalmanConfig":
        if self.process_position_std is not None:
            return self
        return replace(self, process_position_std=image_diagonal / 160.0)


@dataclass(frozen=True)
class KalmanState:
    mean: np.ndarray        # (8,)
    covariance: np.ndarray  # (8, 8)

    @property
    def center(self) -> tuple[float, float]:
        return float(self.mean[0]), float(self.mean[1])

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        """Back-converted (cx, cy, w, h); area/aspect clipped to stay positive."""
        a = max(float(self.mean[2]), 1e-6)
        r = max(float(self.mean[3]), 1e-6)
        w = np.sqrt(a * r)
        return float(self.mean[0]), float(self.mean[1]), float(w), float(a / w)


def _measurement_stds(area: float, cfg: KalmanConfig) -> np.ndarray:
    scale = np.sqrt(max(area, 1e-12))
    return np.array(
        [
            cfg.meas_position_std_scale * scale,
            cfg.meas_position_std_scale * scale,
            cfg.meas_area_std_scale * max(area, 1e-12),
            cfg.meas_aspect_std,
        ]
    )


def kf_init(d: Detection, cfg: KalmanConfig) -> KalmanState:
    """Initialize a state from a detection: zero velocity, configured spread."""
    cx, cy, w, h = d.bbox
    if w <= 0 or h <= 0:
        raise ValidationError("bbox width and height must be positive")
    area = w * h
    mean = np.array([cx, cy, area, w / h, 0.0, 0.0, 0.0, 0.0])
    stds = _measurement_stds(area, cfg) * cfg.init_position_std_scale
    pos_var = stds**2
    diag = np.concatenate([pos_var, cfg.init_velocity_var_scale * pos_var])
    return KalmanState(mean=mean, covariance=np.diag(diag))


def _process_noise(mean: np.ndarray, cfg: KalmanConfig) -> np.ndarray:
    sp = cfg.process_position_std
    if sp is None:
        raise ValidationError("process_position_std unresolved; call cfg.resolved()")
    sa = cfg.process_area_std_scale * max(abs(float(mean[2])), 1e-12)
    sr = cfg.process_aspect_std
    pos = np.array([sp, sp, sa, sr])
    stds = np.concatenate([pos, cfg.velocity_noise_scale * pos])
    return np.diag(stds**2)


def kf_predict(s: KalmanState, cfg: KalmanConfig, dt: int = 1) -> KalmanState:
    """Advance the state dt frames under the constant-velocity model.

    dt > 1 iterates single-frame steps, so multi-frame prediction composes
    exactly with chained one-frame predictions.
    """
    if not isinstance(dt, (int, np.integer)) or dt < 1:
        raise ValidationError("dt must be an integer >= 1")
    mean = s.mean.copy()
    cov = s.covariance.copy()
    for _ in range(int(dt)):
        q = _process_noise(mean, cfg)
        mean = _F @ mean
        cov = _F @ cov @ _F.T + q
        cov = (cov + cov.T) / 2.0
    return KalmanState(mean=mean, covariance=cov)


def kf_update(s: KalmanState, d: Detection, cfg: KalmanConfig) -> KalmanState:
    """Correct the state against the (cx, cy, area, aspect) measurement."""
    cx, cy, w, h = d.bbox
    if w <= 0 or h <= 0:
        raise ValidationError("bbox width and height must be positive")
    z = np.array([cx, cy, w * h, w / h])
    r_mat = np.diag(_measurement_stds(w * h, cfg) ** 2)
    innovation = z - _H @ s.mean
    s_mat = _H @ s.covariance @ _H.T + r_mat
    try:
        gain = np.linalg.solve(s_mat, _H @ s.covariance).T
    except np.linalg.LinAlgError as e:
        raise EstimationError(f"singular innovation covariance: {e}") from e
    mean = s.mean + gain @ innovation
    ikh = np.eye(_DIM) - gain @ _H
    cov = ikh @ s.covariance @ ikh.T + gain @ r_mat @ gain.T  # Joseph form
    cov = (cov + cov.T) / 2.0
    return KalmanState(mean=mean, covariance=cov)
