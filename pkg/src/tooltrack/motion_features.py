"""Trajectory series construction and motion metrics.

Tracks become dense per-frame series (x, y, area, presence mask) over an
analysis window; the metrics are computed strictly within present spans, so
no derivative ever straddles a mask gap. Units: pixels and seconds (frame
deltas are converted through fps).

Metrics: path length, mean velocity / acceleration / jerk (magnitudes of
1st/2nd/3rd finite differences scaled by fps powers), mean curvature
|x'y'' - y'x''| / (x'^2 + y'^2)^(3/2) with central differences inside spans
and one-sided estimates at span edges, mean unsigned turning angle between
successive displacements, tortuosity (path / endpoint distance, straight
bridges across gaps keep it >= 1), and motion ratio (fraction of present
samples moving faster than a stillness threshold).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data_model import SequenceMeta, TrackRecord
from .errors import InsufficientDataError, ValidationError

GAP_FILL_MAX_DEFAULT = 5
MIN_MOTION_SPEED_SCALE = 0.02     # x image diagonal, per second
TORTUOSITY_MIN_ENDPOINT_PX = 1.0  # closed-path sentinel threshold


@dataclass
class TrajectorySeries:
    t: np.ndarray        # frame indices
    x: np.ndarray        # px
    y: np.ndarray        # px
    area: np.ndarray     # px^2
    present: np.ndarray  # bool
    fps: float
    image_size: tuple[int, int]

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.area) == len(self.present) == n):
            raise ValidationError("series arrays must share one length")
        if self.fps <= 0:
            raise ValidationError("fps must be positive")

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class MotionFeatureVector:
    path_length: float          # px
    mean_velocity: float        # px/s
    mean_acceleration: float    # px/s^2
    mean_jerk: float            # px/s^3
    mean_curvature: float       # 1/px
    tortuosity: float           # >= 1; NaN when endpoints (nearly) coincide
    mean_turning_angle: float   # radians, unsigned
    motion_ratio: float         # in [0, 1]

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.path_length,
            self.mean_velocity,
            self.mean_acceleration,
            self.mean_jerk,
            self.mean_curvature,
            self.tortuosity,
            self.mean_turning_angle,
            self.motion_ratio,
        )


def select_main_track(records: Sequence[TrackRecord],
                      window: tuple[int, int]) -> int:
    """Id of the track present in the most frames of [start, end); ties go
    to the smaller id."""
    start, end = window
    if end <= start:
        raise ValidationError("window must be non-empty")
    counts: dict[int, int] = {}
    for r in records:
        if start <= r.frame < end:
            counts[r.track_id] = counts.get(r.track_id, 0) + 1
    if not counts:
        raise InsufficientDataError("no tracks present in the window")
    return min(counts, key=lambda tid: (-counts[tid], tid))


def to_series(records: Sequence[TrackRecord], track_id: int,
              window: tuple[int, int], meta: SequenceMeta,
              gap_fill_max: int = GAP_FILL_MAX_DEFAULT) -> TrajectorySeries:
    """Dense series for one track over [start, end).

    Present is true exactly where the track has a record. Interior gaps of
    at most gap_fill_max frames are linearly interpolated; longer gaps hold
    the previous value and leading/trailing gaps copy the nearest present
    value, so the arrays stay finite everywhere.
    """
    start, end = window
    if end <= start:
        raise ValidationError("window must be non-empty")
    n = end - start
    t = np.arange(start, end)
    x = np.zeros(n)
    y = np.zeros(n)
    area = np.zeros(n)
    present = np.zeros(n, dtype=bool)

    for r in records:
        if r.track_id != track_id or not start <= r.frame < end:
            continue
        i = r.frame - start
        if present[i]:
            raise ValidationError(f"duplicate record for track {track_id} frame {r.frame}")
        cx, cy = r.center
        x[i], y[i], area[i] = cx, cy, r.width * r.height
        present[i] = True

    idx = np.flatnonzero(present)
    if idx.size == 0:
        return TrajectorySeries(t, x, y, area, present, meta.fps,
                                (meta.image_width, meta.image_height))

    for arr in (x, y, area):
        arr[: idx[0]] = arr[idx[0]]
        arr[idx[-1] + 1:] = arr[idx[-1]]
        for a, b in zip(idx[:-1], idx[1:]):
            gap = b - a - 1
            if gap == 0:
                continue
            if gap <= gap_fill_max:
                arr[a + 1: b] = np.interp(np.arange(a + 1, b), [a, b], [arr[a], arr[b]])
            else:
                arr[a + 1: b] = arr[a]
    return TrajectorySeries(t, x, y, area, present, meta.fps,
                            (meta.image_width, meta.image_height))


def _spans(present: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of consecutive present samples, as half-open ranges."""
    out = []
    i = 0
    n = len(present)
    while i < n:
        if present[i]:
            j = i
            while j < n and present[j]:
                j += 1
            out.append((i, j))
            i = j
        else:
            i += 1
    return out


def _span_curvatures(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Per-sample curvature for one span (length >= 3)."""
    L = len(xs)
    d1x = np.empty(L)
    d1y = np.empty(L)
    d2x = np.empty(L)
    d2y = np.empty(L)
    d1x[1:-1] = (xs[2:] - xs[:-2]) / 2.0
    d1y[1:-1] = (ys[2:] - ys[:-2]) / 2.0
    d2x[1:-1] = xs[2:] - 2.0 * xs[1:-1] + xs[:-2]
    d2y[1:-1] = ys[2:] - 2.0 * ys[1:-1] + ys[:-2]
    d1x[0], d1y[0] = xs[1] - xs[0], ys[1] - ys[0]
    d1x[-1], d1y[-1] = xs[-1] - xs[-2], ys[-1] - ys[-2]
    d2x[0] = xs[2] - 2.0 * xs[1] + xs[0]
    d2y[0] = ys[2] - 2.0 * ys[1] + ys[0]
    d2x[-1] = xs[-1] - 2.0 * xs[-2] + xs[-3]
    d2y[-1] = ys[-1] - 2.0 * ys[-2] + ys[-3]
    denom = (d1x**2 + d1y**2) ** 1.5
    num = np.abs(d1x * d2y - d1y * d2x)
    valid = denom > 1e-12
    return num[valid] / denom[valid]


def compute_features(s: TrajectorySeries,
                     min_motion_speed: float | None = None) -> MotionFeatureVector:
    """Aggregate the eight motion metrics over a series.

    min_motion_speed is the stillness threshold in px/s; None uses 2% of the
    image diagonal per second. Raises InsufficientDataError below 4 present
    samples (third differences need them).
    """
    n_present = int(np.count_nonzero(s.present))
    if n_present < 4:
        raise InsufficientDataError(
            f"need >= 4 present samples, got {n_present}"
        )
    if min_motion_speed is None:
        min_motion_speed = MIN_MOTION_SPEED_SCALE * math.hypot(*s.image_size)

    fps = s.fps
    path = 0.0
    speeds, accs, jerks, curvatures, turnings = [], [], [], [], []
    spans = _spans(s.present)
    for a, b in spans:
        xs, ys = s.x[a:b], s.y[a:b]
        if b - a < 2:
            continue
        dx, dy = np.diff(xs), np.diff(ys)
        seg = np.hypot(dx, dy)
        path += float(seg.sum())
        speeds.append(seg * fps)
        if b - a >= 3:
            accs.append(np.hypot(np.diff(xs, 2), np.diff(ys, 2)) * fps**2)
            curvatures.append(_span_curvatures(xs, ys))
            nz = seg > 1e-12
            vx, vy = dx[nz], dy[nz]
            if len(vx) >= 2:
                cross = vx[:-1] * vy[1:] - vy[:-1] * vx[1:]
                dot = vx[:-1] * vx[1:] + vy[:-1] * vy[1:]
                turnings.append(np.abs(np.arctan2(cross, dot)))
        if b - a >= 4:
            jerks.append(np.hypot(np.diff(xs, 3), np.diff(ys, 3)) * fps**3)

    # straight bridges across gaps keep path >= endpoint distance
    bridged = path
    for (_, b_prev), (a_next, _) in zip(spans[:-1], spans[1:]):
        bridged += math.hypot(
            s.x[a_next] - s.x[b_prev - 1], s.y[a_next] - s.y[b_prev - 1]
        )
    first = int(np.flatnonzero(s.present)[0])
    last = int(np.flatnonzero(s.present)[-1])
    endpoint = math.hypot(s.x[last] - s.x[first], s.y[last] - s.y[first])
    tortuosity = bridged / endpoint if endpoint >= TORTUOSITY_MIN_ENDPOINT_PX else math.nan

    def _mean(parts: list[np.ndarray]) -> float:
        if not parts:
            return math.nan
        cat = np.concatenate(parts)
        return float(cat.mean()) if cat.size else math.nan

    all_speeds = np.concatenate(speeds) if speeds else np.zeros(0)
    return MotionFeatureVector(
        path_length=path,
        mean_velocity=_mean(speeds),
        mean_acceleration=_mean(accs),
        mean_jerk=_mean(jerks),
        mean_curvature=_mean(curvatures),
        tortuosity=tortuosity,
        mean_turning_angle=_mean(turnings),
        motion_ratio=float(np.count_nonzero(all_speeds > min_motion_speed)) / n_present,
    )


def sample_window(s: TrajectorySeries, length: int, rng_seed: int) -> TrajectorySeries:
    """Uniformly random contiguous sub-window; deterministic under the seed."""
    n = len(s)
    if length > n:
        raise ValidationError(f"window length {length} exceeds series length {n}")
    if length < 1:
        raise ValidationError("window length must be >= 1")
    rng = np.random.default_rng(rng_seed)
    off = int(rng.integers(0, n - length + 1))
    return TrajectorySeries(
        t=s.t[off: off + length],
        x=s.x[off: off + length],
        y=s.y[off: off + length],
        area=s.area[off: off + length],
        present=s.present[off: off + length],
        fps=s.fps,
        image_size=s.image_size,
    )


def series_to_sequence_row(video_id: str, s: TrajectorySeries) -> dict:
    """Normalized per-video row for sequences.jsonl (x/W, y/H, area/(W*H))."""
    w, h = s.image_size
    return {
        "video_id": video_id,
        "fps": s.fps,
        "x": (s.x / w).tolist(),
        "y": (s.y / h).tolist(),
        "area": (s.area / (w * h)).tolist(),
        "present": s.present.astype(int).tolist(),
    }
