"""Frame-by-frame tracking engine: association, recovery, lifecycle.

Per frame the engine runs predict -> cost matrix -> assignment -> gate ->
retire -> recovery -> new-track init. Tracks go Active -> Inactive the
moment they miss a frame (before recovery runs, so a detection rejected by
the class gate can reclaim its own track in the same frame) and Inactive ->
Deleted once their inactivity exceeds max_inactive_frames; recovery brings
an Inactive track back under its original id.

Recovery cost is the appearance distance, multiplied by the penalty only
when the detection is both outside the (inactivity-grown) spatial gate and
class-mismatched. A spatially close detection with a wrong class label can
therefore still reclaim its track, which is what makes identities survive
occlusions where the detector mislabels the reappearing tool.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .association import (
    AssociationConfig,
    appearance_distance,
    build_cost_matrix,
    gate_assignments,
    hungarian,
)
from .data_model import Detection, SequenceMeta, TrackRecord
from .errors import SequenceError, ValidationError
from .kalman import KalmanConfig, KalmanState, kf_init, kf_predict, kf_update


class TrackStatus(Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"
    DELETED = "deleted"


@dataclass
class Track:
    track_id: int
    class_id: int
    status: TrackStatus
    kalman: KalmanState
    gallery: deque  # most recent embedding last, maxlen = gallery_size
    history: list = field(default_factory=list)  # (frame, (cx, cy, w, h))
    last_seen: int = 0
    inactive_since: int | None = None
    predicted_center: tuple[float, float] | None = None


@dataclass(frozen=True)
class TrackerConfig:
    association: AssociationConfig = field(default_factory=AssociationConfig)
    kalman: KalmanConfig = field(default_factory=KalmanConfig)
    max_inactive_frames: int = 250
    recovery_gate_growth: float = 1.02   # spatial gate growth per inactive frame
    recovery_max_distance: float = 0.7   # appearance ceiling for recovery

    def __post_init__(self):
        if self.max_inactive_frames < 0:
            raise ValidationError("max_inactive_frames must be >= 0")
        if self.recovery_gate_growth < 1.0:
            raise ValidationError("recovery_gate_growth must be >= 1")
        if self.recovery_max_distance <= 0:
            raise ValidationError("recovery_max_distance must be positive")

    def resolved(self, meta: SequenceMeta) -> "TrackerConfig":
        diag = meta.diagonal
        return replace(
            self,
            association=self.association.resolved(diag),
            kalman=self.kalman.resolved(diag),
        )


@dataclass
class TrackerStats:
    frames: int = 0
    created: int = 0
    recoveries: int = 0
    cross_class_matches: int = 0  # accepted pairs where det class != track class


class Tracker:
    """Stateful per-sequence tracker. Frames must arrive strictly in order."""

    def __init__(self, cfg: TrackerConfig, meta: SequenceMeta):
        self.cfg = cfg.resolved(meta)
        self.meta = meta
        self.tracks: dict[int, Track] = {}
        self.next_id = 1
        self.last_frame: int | None = None
        self.stats = TrackerStats()

    # -- lifecycle helpers -------------------------------------------------

    def _purge_expired(self, frame: int) -> None:
        for t in self.tracks.values():
            if (
                t.status is TrackStatus.INACTIVE
                and frame - t.inactive_since > self.cfg.max_inactive_frames
            ):
                t.status = TrackStatus.DELETED

    def retire(self, frame: int) -> None:
        """Move unmatched active tracks to Inactive; purge expired ones."""
        for t in self.tracks.values():
            if t.status is TrackStatus.ACTIVE and t.last_seen < frame:
                t.status = TrackStatus.INACTIVE
                t.inactive_since = frame
        self._purge_expired(frame)

    def _alive(self, status: TrackStatus) -> list[Track]:
        out = [t for t in self.tracks.values() if t.status is status]
        out.sort(key=lambda t: t.track_id)
        return out

    def _mark_matched(self, track: Track, d: Detection, frame: int) -> None:
        track.gallery.append(np.asarray(d.embedding, dtype=np.float64))
        track.history.append((frame, d.bbox))
        track.last_seen = frame
        if d.class_id != track.class_id:
            self.stats.cross_class_matches += 1

    def _new_track(self, d: Detection, frame: int) -> Track:
        track = Track(
            track_id=self.next_id,
            class_id=d.class_id,
            status=TrackStatus.ACTIVE,
            kalman=kf_init(d, self.cfg.kalman),
            gallery=deque([np.asarray(d.embedding, dtype=np.float64)],
                          maxlen=self.cfg.association.gallery_size),
        )
        track.history.append((frame, d.bbox))
        track.last_seen = frame
        self.next_id += 1
        self.tracks[track.track_id] = track
        self.stats.created += 1
        return track

    def _emit(self, track: Track, d: Detection, frame: int) -> TrackRecord:
        cx, cy, w, h = d.bbox
        return TrackRecord(
            frame=frame,
            track_id=track.track_id,
            left=cx - w / 2.0,
            top=cy - h / 2.0,
            width=w,
            height=h,
            confidence=d.confidence,
            class_id=track.class_id,
        )

    # -- recovery ----------------------------------------------------------

    def _recover(self, detections: Sequence[Detection], inactive: Sequence[Track],
                 frame: int) -> list[tuple[int, int]]:
        """Match leftover detections to inactive tracks.

        Cost = appearance distance, multiplied by the penalty when the
        detection is both outside the grown spatial gate and class-mismatched.
        Accepted only below the recovery ceiling.
        """
        if not detections or not inactive:
            return []
        a_cfg = self.cfg.association
        cost = np.zeros((len(inactive), len(detections)))
        for i, t in enumerate(inactive):
            tx, ty = t.predicted_center
            gate = a_cfg.spatial_gate_px * (
                self.cfg.recovery_gate_growth ** (frame - t.inactive_since)
            )
            for j, d in enumerate(detections):
                feat = appearance_distance(t.gallery, d.embedding, a_cfg.gallery_size)
                far = np.hypot(d.bbox[0] - tx, d.bbox[1] - ty) > gate
                mismatch = d.class_id != t.class_id
                cost[i, j] = feat * (a_cfg.mismatch_penalty if far and mismatch else 1.0)
        result = hungarian(cost)
        ceiling = min(a_cfg.mismatch_penalty, self.cfg.recovery_max_distance)
        return [(r, c) for r, c in result.pairs if cost[r, c] < ceiling]

    # -- main step ----------------------------------------------------------

    def step(self, frame: int, detections: Sequence[Detection]) -> list[TrackRecord]:
        """Process one frame; returns records sorted by track id."""
        if self.last_frame is not None and frame <= self.last_frame:
            raise SequenceError(
                f"frame {frame} not after previous frame {self.last_frame}"
            )
        dt = 1 if self.last_frame is None else frame - self.last_frame
        self._purge_expired(frame)

        for t in self.tracks.values():
            if t.status is TrackStatus.DELETED:
                continue
            t.kalman = kf_predict(t.kalman, self.cfg.kalman, dt)
            t.predicted_center = t.kalman.center

        a_cfg = self.cfg.association
        dets = [d for d in detections if d.confidence >= a_cfg.min_confidence]

        active = self._alive(TrackStatus.ACTIVE)
        cost = build_cost_matrix(active, dets, a_cfg)
        accepted, _, leftover_idx = gate_assignments(hungarian(cost), cost, a_cfg)

        records = []
        for r, c in accepted:
            track, d = active[r], dets[c]
            track.kalman = kf_update(track.kalman, d, self.cfg.kalman)
            self._mark_matched(track, d, frame)
            records.append(self._emit(track, d, frame))

        # unmatched actives go Inactive now so same-frame recovery can see them
        self.retire(frame)

        leftover = [dets[j] for j in leftover_idx]
        inactive = self._alive(TrackStatus.INACTIVE)
        recovered_det_idx = set()
        for r, c in self._recover(leftover, inactive, frame):
            track, d = inactive[r], leftover[c]
            track.status = TrackStatus.ACTIVE
            track.inactive_since = None
            track.kalman = kf_init(d, self.cfg.kalman)  # re-seed from the match
            self._mark_matched(track, d, frame)
            records.append(self._emit(track, d, frame))
            recovered_det_idx.add(c)
            self.stats.recoveries += 1

        for c, d in enumerate(leftover):
            if c not in recovered_det_idx:
                track = self._new_track(d, frame)
                records.append(self._emit(track, d, frame))

        self.last_frame = frame
        self.stats.frames += 1
        records.sort(key=lambda rec: rec.track_id)
        return records


def run(frames: Mapping[int, Sequence[Detection]] | Iterable[tuple[int, Sequence[Detection]]],
        cfg: TrackerConfig, meta: SequenceMeta,
        tracker_out: list | None = None) -> list[TrackRecord]:
    """Track a whole detection stream; deterministic given input and config.

    Every integer frame from 0 through the last detected frame is stepped,
    so gaps behave as empty frames (misses). Pass a list as tracker_out to
    receive the finished Tracker (stats, final state) as its single element.
    """
    grouped = dict(frames)
    tracker = Tracker(cfg, meta)
    if tracker_out is not None:
        tracker_out.append(tracker)
    records: list[TrackRecord] = []
    if grouped:
        last = max(grouped)
        for f in range(0, last + 1):
            records.extend(tracker.step(f, grouped.get(f, [])))
    return records


def intra_track_distance_quantile(galleries: Iterable[Sequence[np.ndarray]],
                                  q: float = 0.7) -> float:
    """Calibration helper: q-quantile of within-gallery pairwise embedding
    distances, a reasonable recovery_max_distance for a fitted corpus."""
    dists = []
    for gallery in galleries:
        arr = np.stack(list(gallery))
        n = arr.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                dists.append(float(np.linalg.norm(arr[i] - arr[j])))
    if not dists:
        raise ValidationError("no gallery pairs to calibrate on")
    return float(np.quantile(np.asarray(dists), q))
