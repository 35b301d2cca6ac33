"""Track-detection association: cost matrix construction and assignment.

The per-pair cost combines appearance distance with two gate penalties:

    cost(t, d) = appearance_distance(t, d)
                 + P * [center distance > spatial gate]
                 + P * [detection class != track class]

where P is a penalty larger than any achievable appearance distance. The
matrix is minimized with a from-scratch Hungarian solver (kernels.lap_solve)
and pairs whose cost reaches P are rejected afterwards, so a fired gate can
never survive into an accepted match.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import kernels
from .data_model import Detection
from .errors import ValidationError


@dataclass(frozen=True)
class AssociationConfig:
    mismatch_penalty: float = 1000.0       # added per fired gate
    spatial_gate_px: float | None = None   # None -> 0.05 x image diagonal
    gallery_size: int = 30                 # recent embeddings kept per track
    min_confidence: float = 0.5            # detections below are dropped
    class_gating: bool = True              # toggle for the class term

    def __post_init__(self):
        if self.mismatch_penalty <= 0:
            raise ValidationError("mismatch_penalty must be positive")
        if self.spatial_gate_px is not None and self.spatial_gate_px <= 0:
            raise ValidationError("spatial_gate_px must be positive")
        if self.gallery_size < 1:
            raise ValidationError("gallery_size must be >= 1")

    def resolved(self, image_diagonal: float) -> "AssociationConfig":
        if self.spatial_gate_px is not None:
            return self
        return replace(self, spatial_gate_px=0.05 * image_diagonal)


@dataclass
class CostMatrix:
    """Association costs plus the per-entry gate flags that produced them."""

    cost: np.ndarray          # (n_tracks, n_detections)
    appearance: np.ndarray    # appearance term alone
    spatial_gated: np.ndarray  # bool: center distance exceeded the gate
    class_gated: np.ndarray    # bool: class mismatch (and gating enabled)

    @property
    def shape(self) -> tuple[int, int]:
        return self.cost.shape


def appearance_distance(gallery: Sequence[np.ndarray], embedding: np.ndarray,
                        n_recent: int) -> float:
    """Min Euclidean distance from the detection embedding to the most
    recent n_recent gallery embeddings. Older entries never participate."""
    if len(gallery) == 0:
        raise ValidationError("track gallery must hold at least one embedding")
    if n_recent < 1:
        raise ValidationError("n_recent must be >= 1")
    recent = list(gallery)[-n_recent:]
    stack = np.ascontiguousarray(np.stack(recent), dtype=np.float64)
    query = np.ascontiguousarray(embedding, dtype=np.float64)
    if stack.shape[1] != query.shape[0]:
        raise ValidationError("embedding dimension mismatch")
    return float(kernels.min_euclidean(stack, query))


def build_cost_matrix(tracks: Sequence, detections: Sequence[Detection],
                      cfg: AssociationConfig) -> CostMatrix:
    """Build the gated cost matrix for active tracks x current detections.

    Each track must expose predicted_center, class_id and gallery; the
    engine predicts all active tracks before calling this.
    """
    if cfg.spatial_gate_px is None:
        raise ValidationError("spatial_gate_px unresolved; call cfg.resolved()")
    n, m = len(tracks), len(detections)
    cost = np.zeros((n, m))
    appearance = np.zeros((n, m))
    spatial_gated = np.zeros((n, m), dtype=bool)
    class_gated = np.zeros((n, m), dtype=bool)
    for i, t in enumerate(tracks):
        tx, ty = t.predicted_center
        for j, d in enumerate(detections):
            feat = appearance_distance(t.gallery, d.embedding, cfg.gallery_size)
            dx = d.bbox[0] - tx
            dy = d.bbox[1] - ty
            far = np.hypot(dx, dy) > cfg.spatial_gate_px
            mismatch = cfg.class_gating and d.class_id != t.class_id
            appearance[i, j] = feat
            spatial_gated[i, j] = far
            class_gated[i, j] = mismatch
            cost[i, j] = feat + cfg.mismatch_penalty * (int(far) + int(mismatch))
    return CostMatrix(cost, appearance, spatial_gated, class_gated)


@dataclass(frozen=True)
class AssignmentResult:
    pairs: tuple[tuple[int, int], ...]
    unmatched_rows: tuple[int, ...]
    unmatched_cols: tuple[int, ...]
    total_cost: float


def hungarian(cost) -> AssignmentResult:
    """Optimal assignment for a (possibly rectangular) cost matrix.

    Rectangular inputs are padded square with a uniform constant, which
    leaves the optimum over real pairs unchanged; padded pairs are reported
    as unmatched. Ties resolve toward low (row, col) indices.
    """
    matrix = cost.cost if isinstance(cost, CostMatrix) else np.asarray(cost, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValidationError("cost matrix must be 2-dimensional")
    n, m = matrix.shape
    if n == 0 or m == 0:
        return AssignmentResult((), tuple(range(n)), tuple(range(m)), 0.0)
    if not np.all(np.isfinite(matrix)):
        raise ValidationError("cost matrix entries must be finite")

    side = max(n, m)
    pad_value = float(matrix.max()) + 1.0
    square = np.full((side, side), pad_value)
    square[:n, :m] = matrix
    assign = kernels.lap_solve(square)

    pairs = []
    total = 0.0
    for r in range(n):
        c = int(assign[r])
        if c < m:
            pairs.append((r, c))
            total += float(matrix[r, c])
    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    return AssignmentResult(
        pairs=tuple(sorted(pairs)),
        unmatched_rows=tuple(r for r in range(n) if r not in matched_rows),
        unmatched_cols=tuple(c for c in range(m) if c not in matched_cols),
        total_cost=total,
    )


def gate_assignments(result: AssignmentResult, cost: CostMatrix,
                     cfg: AssociationConfig):
    """Reject assigned pairs whose cost reached the penalty level.

    Returns (accepted pairs, unassigned track indices, unassigned detection
    indices); rejected detections flow on to track recovery.
    """
    matrix = cost.cost
    accepted = []
    extra_rows, extra_cols = [], []
    for r, c in result.pairs:
        if matrix[r, c] >= cfg.mismatch_penalty:
            extra_rows.append(r)
            extra_cols.append(c)
        else:
            accepted.append((r, c))
    unassigned_tracks = tuple(sorted([*result.unmatched_rows, *extra_rows]))
    unassigned_dets = tuple(sorted([*result.unmatched_cols, *extra_cols]))
    return tuple(accepted), unassigned_tracks, unassigned_dets
