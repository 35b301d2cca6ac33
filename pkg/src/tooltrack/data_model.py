"""Domain types and file I/O.

File formats (all LF line endings):

* detections.jsonl - line 1 is a header object with the sequence metadata,
  every following line is one detection:
  ``{"frame": int, "class_id": int, "conf": float, "bbox": [cx, cy, w, h],
  "emb": [float x embedding_dim]}``
* tracks.csv / gt.csv - headerless CSV rows
  ``frame,id,left,top,width,height,conf,class_id``
* labels.csv - ``video_id,rater1,rater2`` with a header line
* features.csv - header row, then one row of motion features per video
* sequences.jsonl - one JSON object per video with normalized x/y/area
  series and a 0/1 presence mask

Floats are serialized with ``repr`` (shortest round-trip form), so
write-then-read is bit-exact and byte output is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, SchemaError, ValidationError

FEATURE_COLUMNS = (
    "path_length",
    "mean_velocity",
    "mean_acceleration",
    "mean_jerk",
    "mean_curvature",
    "tortuosity",
    "mean_turning_angle",
    "motion_ratio",
)


@dataclass(frozen=True)
class SequenceMeta:
    """Per-sequence constants carried in the detections file header."""

    image_width: int
    image_height: int
    fps: float = 25.0
    embedding_dim: int = 128

    def __post_init__(self):
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValidationError("image dimensions must be positive")
        if self.fps <= 0:
            raise ValidationError("fps must be positive")
        if self.embedding_dim <= 0:
            raise ValidationError("embedding_dim must be positive")

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.image_width, self.image_height))


@dataclass
class Detection:
    """One tool observation in one frame. bbox is (cx, cy, w, h) in pixels."""

    frame: int
    bbox: tuple[float, float, float, float]
    confidence: float
    class_id: int
    embedding: np.ndarray

    def __post_init__(self):
        if self.frame < 0:
            raise ValidationError("frame must be >= 0")
        if self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise ValidationError("bbox width and height must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError("confidence must be in [0, 1]")
        self.embedding = np.asarray(self.embedding, dtype=np.float64)

    @property
    def center(self) -> tuple[float, float]:
        return self.bbox[0], self.bbox[1]

    @property
    def area(self) -> float:
        return self.bbox[2] * self.bbox[3]

    @property
    def aspect(self) -> float:
        return self.bbox[2] / self.bbox[3]


@dataclass(frozen=True)
class TrackRecord:
    """One emitted track observation. bbox is (left, top, w, h) in pixels."""

    frame: int
    track_id: int
    left: float
    top: float
    width: float
    height: float
    confidence: float
    class_id: int

    @property
    def center(self) -> tuple[float, float]:
        return self.left + self.width / 2.0, self.top + self.height / 2.0

    @property
    def ltwh(self) -> tuple[float, float, float, float]:
        return self.left, self.top, self.width, self.height


@dataclass(frozen=True)
class SkillLabel:
    """Binarized efficiency label for one video."""

    video_id: str
    rater_scores: tuple[int, int]
    mean_score: float
    binary_class: str  # "low" | "high"


BINARY_CUTOFF = 3.5


def binarize_label(video_id: str, scores: tuple[int, int]) -> SkillLabel:
    """Average two rater scores and binarize at the cutoff (mean >= 3.5 -> high)."""
    r1, r2 = scores
    for s in (r1, r2):
        if not 1 <= s <= 5:
            raise ValidationError(f"rater score {s} outside [1, 5]")
    mean = (r1 + r2) / 2.0
    cls = "high" if mean >= BINARY_CUTOFF else "low"
    return SkillLabel(video_id, (int(r1), int(r2)), mean, cls)


# --- detections.jsonl ---------------------------------------------------

_HEADER_KEYS = ("image_width", "image_height", "fps", "embedding_dim")


def read_detections(path) -> tuple[SequenceMeta, dict[int, list[Detection]]]:
    """Read a detections.jsonl file into (meta, {frame: [Detection, ...]}).

    Frames appear in ascending order; frames with no detections simply have
    no key. Raises ParseError (bad JSON / missing fields, with line number)
    or SchemaError (embedding length mismatch, with line number).
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file, expected a header line")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:1: bad header JSON: {e}") from e
    if not isinstance(header, dict) or set(header) != set(_HEADER_KEYS):
        raise SchemaError(
            f"{path}:1: header must carry exactly the keys {list(_HEADER_KEYS)}"
        )
    meta = SequenceMeta(
        image_width=int(header["image_width"]),
        image_height=int(header["image_height"]),
        fps=float(header["fps"]),
        embedding_dim=int(header["embedding_dim"]),
    )

    grouped: dict[int, list[Detection]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}:{lineno}: bad JSON: {e}") from e
        try:
            emb = obj["emb"]
            if len(emb) != meta.embedding_dim:
                raise SchemaError(
                    f"{path}:{lineno}: embedding length {len(emb)} != "
                    f"declared embedding_dim {meta.embedding_dim}"
                )
            det = Detection(
                frame=int(obj["frame"]),
                bbox=tuple(float(v) for v in obj["bbox"]),
                confidence=float(obj["conf"]),
                class_id=int(obj["class_id"]),
                embedding=np.asarray(emb, dtype=np.float64),
            )
        except SchemaError:
            raise
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise ParseError(f"{path}:{lineno}: bad detection line: {e}") from e
        grouped.setdefault(det.frame, []).append(det)

    return meta, dict(sorted(grouped.items()))


def write_detections(path, meta: SequenceMeta, frames: dict[int, list[Detection]]) -> None:
    """Write detections grouped by frame back to the jsonl format."""
    out = [
        json.dumps(
            {
                "image_width": meta.image_width,
                "image_height": meta.image_height,
                "fps": meta.fps,
                "embedding_dim": meta.embedding_dim,
            }
        )
    ]
    for frame in sorted(frames):
        for d in frames[frame]:
            out.append(
                json.dumps(
                    {
                        "frame": int(d.frame),
                        "class_id": int(d.class_id),
                        "conf": float(d.confidence),
                        "bbox": [float(v) for v in d.bbox],
                        "emb": [float(v) for v in d.embedding],
                    }
                )
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


# --- tracks.csv / gt.csv ------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_tracks(records: Sequence[TrackRecord], path) -> None:
    """Write MOT-style CSV. Records must be sorted by (frame, track_id)."""
    keys = [(r.frame, r.track_id) for r in records]
    if keys != sorted(keys):
        raise ValidationError("records must be sorted by (frame, track_id)")
    if len(set(keys)) != len(keys):
        raise ValidationError("duplicate (frame, track_id) pair")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(
                f"{r.frame},{r.track_id},{_fmt(r.left)},{_fmt(r.top)},"
                f"{_fmt(r.width)},{_fmt(r.height)},{_fmt(r.confidence)},{r.class_id}\n"
            )


def read_tracks(path) -> list[TrackRecord]:
    """Read a tracks.csv / gt.csv file."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise ParseError(f"{path}:{lineno}: expected 8 columns, got {len(parts)}")
            try:
                records.append(
                    TrackRecord(
                        frame=int(parts[0]),
                        track_id=int(parts[1]),
                        left=float(parts[2]),
                        top=float(parts[3]),
                        width=float(parts[4]),
                        height=float(parts[5]),
                        confidence=float(parts[6]),
                        class_id=int(parts[7]),
                    )
                )
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: {e}") from e
    return records


# --- labels.csv ----------------------------------------------------------


def read_labels(path) -> list[SkillLabel]:
    """Read labels.csv (header video_id,rater1,rater2)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].replace(" ", "") != "video_id,rater1,rater2":
        raise ParseError(f"{path}:1: expected header 'video_id,rater1,rater2'")
    labels = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected 3 columns")
        try:
            labels.append(binarize_label(parts[0], (int(parts[1]), int(parts[2]))))
        except (ValueError, ValidationError) as e:
            raise ParseError(f"{path}:{lineno}: {e}") from e
    return labels


# --- features.csv ---------------------------------------------------------


def write_features(rows: Iterable[tuple[str, Sequence[float]]], path) -> None:
    """Write feature rows [(video_id, 8 values), ...] with the fixed header."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("video_id," + ",".join(FEATURE_COLUMNS) + "\n")
        for video_id, values in rows:
            values = list(values)
            if len(values) != len(FEATURE_COLUMNS):
                raise ValidationError(
                    f"expected {len(FEATURE_COLUMNS)} feature values, got {len(values)}"
                )
            fh.write(video_id + "," + ",".join(_fmt(v) for v in values) + "\n")


def read_features(path) -> tuple[list[str], np.ndarray]:
    """Read features.csv into (video_ids, matrix of shape (n, 8))."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    expected = "video_id," + ",".join(FEATURE_COLUMNS)
    if not lines or lines[0] != expected:
        raise ParseError(f"{path}:1: expected header '{expected}'")
    ids, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 1 + len(FEATURE_COLUMNS):
            raise ParseError(f"{path}:{lineno}: wrong column count")
        try:
            rows.append([float(v) for v in parts[1:]])
        except ValueError as e:
            raise ParseError(f"{path}:{lineno}: {e}") from e
        ids.append(parts[0])
    matrix = np.asarray(rows, dtype=np.float64) if rows else np.zeros((0, 8))
    return ids, matrix


# --- sequences.jsonl -------------------------------------------------------


def write_sequences(rows: Iterable[dict], path) -> None:
    """Write per-video normalized series objects, one JSON object per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(
                json.dumps(
                    {
                        "video_id": row["video_id"],
                        "fps": float(row["fps"]),
                        "x": [float(v) for v in row["x"]],
                        "y": [float(v) for v in row["y"]],
                        "area": [float(v) for v in row["area"]],
                        "present": [int(v) for v in row["present"]],
                    }
                )
                + "\n"
            )


def read_sequences(path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}:{lineno}: bad JSON: {e}") from e
    return rows


# --- meta.json --------------------------------------------------------------


def write_meta(path, meta: SequenceMeta) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(
            {
                "image_width": meta.image_width,
                "image_height": meta.image_height,
                "fps": meta.fps,
                "embedding_dim": meta.embedding_dim,
            },
            fh,
        )
        fh.write("\n")


def read_meta(path) -> SequenceMeta:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: bad JSON: {e}") from e
    if not isinstance(obj, dict) or set(obj) != set(_HEADER_KEYS):
        raise SchemaError(f"{path}: expected exactly the keys {list(_HEADER_KEYS)}")
    return SequenceMeta(
        image_width=int(obj["image_width"]),
        image_height=int(obj["image_height"]),
        fps=float(obj["fps"]),
        embedding_dim=int(obj["embedding_dim"]),
    )
