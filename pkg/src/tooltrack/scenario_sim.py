"""Synthetic detection-stream generator with known ground truth.

Objects follow parametric motions (line, circle, piecewise-linear waypoints)
and emit one jittered detection per non-occluded frame; embeddings are drawn
as a per-object cluster center plus isotropic Gaussian noise, so appearance
separability is directly controllable in tests. Ground truth keeps the true
boxes and persistent ids through occlusions. Everything is deterministic
under the spec seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data_model import Detection, SequenceMeta, TrackRecord
from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class MotionSpec:
    kind: str  # "line" | "circle" | "waypoints"
    start: tuple[float, float] | None = None
    velocity: tuple[float, float] | None = None
    center: tuple[float, float] | None = None
    radius: float | None = None
    omega: float | None = None   # radians per frame
    phase: float = 0.0
    waypoints: tuple[tuple[float, float, float], ...] | None = None  # (frame, x, y)

    def position(self, frame: int) -> tuple[float, float]:
        if self.kind == "line":
            return (
                self.start[0] + self.velocity[0] * frame,
                self.start[1] + self.velocity[1] * frame,
            )
        if self.kind == "circle":
            ang = self.phase + self.omega * frame
            return (
                self.center[0] + self.radius * np.cos(ang),
                self.center[1] + self.radius * np.sin(ang),
            )
        if self.kind == "waypoints":
            ts = np.array([w[0] for w in self.waypoints])
            xs = np.array([w[1] for w in self.waypoints])
            ys = np.array([w[2] for w in self.waypoints])
            return float(np.interp(frame, ts, xs)), float(np.interp(frame, ts, ys))
        raise ValidationError(f"unknown motion kind {self.kind!r}")


@dataclass(frozen=True)
class ObjectSpec:
    class_id: int
    motion: MotionSpec
    embedding_center: tuple[float, ...]
    embedding_noise_std: float = 0.0
    width: float = 60.0
    height: float = 40.0
    confidence: float = 1.0
    occlusions: tuple[tuple[int, int], ...] = ()     # half-open [start, end)
    class_flip_prob: float = 0.0
    class_flip_windows: tuple[tuple[int, int], ...] = ()  # forced flips, half-open

    def occluded(self, frame: int) -> bool:
        return any(s <= frame < e for s, e in self.occlusions)

    def flip_forced(self, frame: int) -> bool:
        return any(s <= frame < e for s, e in self.class_flip_windows)


@dataclass(frozen=True)
class ScenarioSpec:
    duration: int
    image_width: int = 1920
    image_height: int = 1080
    fps: float = 25.0
    objects: tuple[ObjectSpec, ...] = ()
    detector_noise: float = 0.0   # bbox jitter std, px
    fp_rate: float = 0.0          # spurious detections per frame (Bernoulli)
    seed: int = 0

    def __post_init__(self):
        if self.duration < 1:
            raise ValidationError("duration must be >= 1")
        if not 0.0 <= self.fp_rate <= 1.0:
            raise ValidationError("fp_rate must be in [0, 1]")
        dims = {len(o.embedding_center) for o in self.objects}
        if len(dims) > 1:
            raise ValidationError("objects must share one embedding dimension")
        for o in self.objects:
            if not 0.0 <= o.class_flip_prob <= 1.0:
                raise ValidationError("class_flip_prob must be in [0, 1]")
            for s, e in (*o.occlusions, *o.class_flip_windows):
                if not (0 <= s <= e <= self.duration):
                    raise ValidationError(
                        f"interval ({s}, {e}) outside [0, {self.duration}]"
                    )

    @property
    def embedding_dim(self) -> int:
        return len(self.objects[0].embedding_center) if self.objects else 128

    @property
    def meta(self) -> SequenceMeta:
        return SequenceMeta(
            image_width=self.image_width,
            image_height=self.image_height,
            fps=self.fps,
            embedding_dim=self.embedding_dim,
        )


@dataclass
class SimResult:
    meta: SequenceMeta
    frames: dict[int, list[Detection]]
    gt: list[TrackRecord]


def generate(spec: ScenarioSpec) -> SimResult:
    """Produce the detection stream and matching ground truth for a spec."""
    rng = np.random.default_rng(spec.seed)
    dim = spec.embedding_dim
    frames: dict[int, list[Detection]] = {}
    gt: list[TrackRecord] = []

    for f in range(spec.duration):
        dets: list[Detection] = []
        for obj_idx, obj in enumerate(spec.objects):
            cx, cy = obj.motion.position(f)
            gt.append(
                TrackRecord(
                    frame=f,
                    track_id=obj_idx + 1,
                    left=cx - obj.width / 2.0,
                    top=cy - obj.height / 2.0,
                    width=obj.width,
                    height=obj.height,
                    confidence=1.0,
                    class_id=obj.class_id,
                )
            )
            if obj.occluded(f):
                continue
            jitter = (
                rng.normal(0.0, spec.detector_noise, 4)
                if spec.detector_noise > 0
                else np.zeros(4)
            )
            emb = np.asarray(obj.embedding_center, dtype=np.float64)
            if obj.embedding_noise_std > 0:
                emb = emb + rng.normal(0.0, obj.embedding_noise_std, dim)
            cls = obj.class_id
            if obj.flip_forced(f):
                cls = obj.class_id + 1
            elif obj.class_flip_prob > 0 and rng.random() < obj.class_flip_prob:
                cls = obj.class_id + 1
            dets.append(
                Detection(
                    frame=f,
                    bbox=(
                        cx + jitter[0],
                        cy + jitter[1],
                        max(obj.width + jitter[2], 1.0),
                        max(obj.height + jitter[3], 1.0),
                    ),
                    confidence=obj.confidence,
                    class_id=cls,
                    embedding=emb,
                )
            )
        if spec.fp_rate > 0 and rng.random() < spec.fp_rate:
            dets.append(
                Detection(
                    frame=f,
                    bbox=(
                        rng.uniform(0, spec.image_width),
                        rng.uniform(0, spec.image_height),
                        rng.uniform(20, 80),
                        rng.uniform(20, 80),
                    ),
                    confidence=float(rng.uniform(0.6, 1.0)),
                    class_id=int(rng.integers(0, 10)),
                    embedding=rng.normal(0.0, 1.0, dim),
                )
            )
        if dets:
            frames[f] = dets

    return SimResult(meta=spec.meta, frames=frames, gt=gt)


# --- JSON loading ------------------------------------------------------------


def _motion_from_dict(obj: dict) -> MotionSpec:
    kind = obj.get("kind")
    if kind == "line":
        return MotionSpec(kind="line", start=tuple(obj["start"]),
                          velocity=tuple(obj["velocity"]))
    if kind == "circle":
        return MotionSpec(kind="circle", center=tuple(obj["center"]),
                          radius=float(obj["radius"]), omega=float(obj["omega"]),
                          phase=float(obj.get("phase", 0.0)))
    if kind == "waypoints":
        return MotionSpec(kind="waypoints",
                          waypoints=tuple(tuple(w) for w in obj["waypoints"]))
    raise ParseError(f"unknown motion kind {kind!r}")


def scenario_from_dict(obj: dict) -> ScenarioSpec:
    try:
        objects = tuple(
            ObjectSpec(
                class_id=int(o["class_id"]),
                motion=_motion_from_dict(o["motion"]),
                embedding_center=tuple(float(v) for v in o["embedding_center"]),
                embedding_noise_std=float(o.get("embedding_noise_std", 0.0)),
                width=float(o.get("width", 60.0)),
                height=float(o.get("height", 40.0)),
                confidence=float(o.get("confidence", 1.0)),
                occlusions=tuple(tuple(int(v) for v in iv) for iv in o.get("occlusions", [])),
                class_flip_prob=float(o.get("class_flip_prob", 0.0)),
                class_flip_windows=tuple(
                    tuple(int(v) for v in iv) for iv in o.get("class_flip_windows", [])
                ),
            )
            for o in obj.get("objects", [])
        )
        return ScenarioSpec(
            duration=int(obj["duration"]),
            image_width=int(obj.get("image_width", 1920)),
            image_height=int(obj.get("image_height", 1080)),
            fps=float(obj.get("fps", 25.0)),
            objects=objects,
            detector_noise=float(obj.get("detector_noise", 0.0)),
            fp_rate=float(obj.get("fp_rate", 0.0)),
            seed=int(obj.get("seed", 0)),
        )
    except (KeyError, TypeError) as e:
        raise ParseError(f"bad scenario spec: {e}") from e


def read_scenario(path) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: bad JSON: {e}") from e
    return scenario_from_dict(obj)
