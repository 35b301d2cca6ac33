"""CLEAR-MOT evaluation: ID switches, MOTA, FP/FN, precision, recall.

Frame matching prefers carryover (a ground-truth object keeps its previous
predicted id while the overlap holds), then assigns the remaining boxes
optimally by IoU, rejecting pairs under the threshold. Only frames present
in the ground truth are evaluated, which also covers ground truth annotated
at reduced temporal resolution.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .association import hungarian
from .data_model import TrackRecord
from .errors import ValidationError

_REJECT = 1e9  # cost for below-threshold pairs; >> any achievable 1 - IoU total


@dataclass(frozen=True)
class MotSummary:
    id_switches: int
    mota: float
    fp: int
    fn: int
    tp: int
    precision: float
    recall: float
    num_gt_objects: int

    @classmethod
    def from_counts(cls, fp: int, fn: int, id_switches: int,
                    num_gt_objects: int) -> "MotSummary":
        """Build a summary from raw event counts (tp = gt - fn)."""
        if num_gt_objects <= 0:
            raise ValidationError("num_gt_objects must be positive")
        tp = num_gt_objects - fn
        mota = 1.0 - (fp + fn + id_switches) / num_gt_objects
        precision = tp / (tp + fp) if tp + fp > 0 else 1.0
        recall = tp / num_gt_objects
        return cls(
            id_switches=id_switches,
            mota=mota,
            fp=fp,
            fn=fn,
            tp=tp,
            precision=precision,
            recall=recall,
            num_gt_objects=num_gt_objects,
        )

    def to_dict(self) -> dict:
        return {
            "id_switches": self.id_switches,
            "mota": self.mota,
            "fp": self.fp,
            "fn": self.fn,
            "tp": self.tp,
            "precision": self.precision,
            "recall": self.recall,
            "num_gt_objects": self.num_gt_objects,
        }


@dataclass
class FrameEvents:
    matches: list[tuple[int, int]] = field(default_factory=list)  # (gt_id, pred_id)
    switches: list[int] = field(default_factory=list)             # gt ids that switched
    fp_ids: list[int] = field(default_factory=list)
    fn_ids: list[int] = field(default_factory=list)
    num_gt: int = 0


def match_frame(gt: Sequence[tuple[int, tuple[float, float, float, float]]],
                pred: Sequence[tuple[int, tuple[float, float, float, float]]],
                iou_min: float = 0.5,
                carryover: dict | None = None) -> FrameEvents:
    """Match one frame's (id, ltwh-box) lists and emit TP/FP/FN/switch events.

    carryover maps gt id -> last matched pred id; it is updated in place so
    switches across occlusion gaps are counted against the last known match.
    """
    if not 0.0 < iou_min < 1.0:
        raise ValidationError("iou_min must be in (0, 1)")
    carryover = carryover if carryover is not None else {}
    events = FrameEvents(num_gt=len(gt))

    gt_ids = [g[0] for g in gt]
    pred_ids = [p[0] for p in pred]
    gt_boxes = np.array([g[1] for g in gt], dtype=np.float64).reshape(len(gt), 4)
    pred_boxes = np.array([p[1] for p in pred], dtype=np.float64).reshape(len(pred), 4)
    iou = kernels.iou_matrix(gt_boxes, pred_boxes) if gt and pred else np.zeros((len(gt), len(pred)))

    pred_index = {pid: j for j, pid in enumerate(pred_ids)}
    taken_gt, taken_pred = set(), set()

    # carryover pass: keep last frame's correspondence wherever it still holds
    for i, gid in enumerate(gt_ids):
        prev = carryover.get(gid)
        if prev is None or prev not in pred_index:
            continue
        j = pred_index[prev]
        if j not in taken_pred and iou[i, j] >= iou_min:
            events.matches.append((gid, prev))
            taken_gt.add(i)
            taken_pred.add(j)

    # optimal assignment on the remainder
    free_gt = [i for i in range(len(gt_ids)) if i not in taken_gt]
    free_pred = [j for j in range(len(pred_ids)) if j not in taken_pred]
    if free_gt and free_pred:
        cost = np.full((len(free_gt), len(free_pred)), _REJECT)
        for a, i in enumerate(free_gt):
            for b, j in enumerate(free_pred):
                if iou[i, j] >= iou_min:
                    cost[a, b] = 1.0 - iou[i, j]
        for a, b in hungarian(cost).pairs:
            if cost[a, b] >= _REJECT:
                continue
            i, j = free_gt[a], free_pred[b]
            gid, pid = gt_ids[i], pred_ids[j]
            if gid in carryover and carryover[gid] != pid:
                events.switches.append(gid)
            events.matches.append((gid, pid))
            taken_gt.add(i)
            taken_pred.add(j)

    for gid, pid in events.matches:
        carryover[gid] = pid
    events.fn_ids = [gt_ids[i] for i in range(len(gt_ids)) if i not in taken_gt]
    events.fp_ids = [pred_ids[j] for j in range(len(pred_ids)) if j not in taken_pred]
    return events


def summarize(events: Iterable[FrameEvents]) -> MotSummary:
    """Fold per-frame events into the sequence summary."""
    fp = fn = idsw = tp = num_gt = 0
    for ev in events:
        fp += len(ev.fp_ids)
        fn += len(ev.fn_ids)
        idsw += len(ev.switches)
        tp += len(ev.matches)
        num_gt += ev.num_gt
    if num_gt == 0:
        raise ValidationError("no ground-truth objects; rates undefined")
    return MotSummary.from_counts(fp=fp, fn=fn, id_switches=idsw,
                                  num_gt_objects=num_gt)


def evaluate(gt_records: Sequence[TrackRecord], pred_records: Sequence[TrackRecord],
             iou_min: float = 0.5) -> MotSummary:
    """Evaluate predicted records against ground truth over a sequence.

    Only frames that appear in the ground truth are scored, so predictions
    on unannotated frames are neither rewarded nor punished.
    """
    gt_by_frame: dict[int, list] = defaultdict(list)
    for r in gt_records:
        gt_by_frame[r.frame].append((r.track_id, r.ltwh))
    pred_by_frame: dict[int, list] = defaultdict(list)
    for r in pred_records:
        pred_by_frame[r.frame].append((r.track_id, r.ltwh))

    carryover: dict = {}
    events = []
    for frame in sorted(gt_by_frame):
        events.append(
            match_frame(gt_by_frame[frame], pred_by_frame.get(frame, []),
                        iou_min=iou_min, carryover=carryover)
        )
    return summarize(events)
