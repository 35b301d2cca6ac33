from itertools import permutations

import numpy as np
import pytest

from tooltrack.data_model import TrackRecord
from tooltrack.errors import ValidationError
from tooltrack.kernels import _iou_matrix_numpy
from tooltrack.mot_eval import MotSummary, evaluate, match_frame, summarize


def boxes(*specs):
    return [(i, tuple(map(float, b))) for i, b in specs]


def rec(frame, tid, left, top, w=10.0, h=10.0, cls=0):
    return TrackRecord(frame, tid, float(left), float(top), w, h, 1.0, cls)


# --- match_frame ---------------------------------------------------------


def test_identical_boxes_all_tp():
    gt = boxes((1, (0, 0, 10, 10)), (2, (50, 50, 10, 10)))
    ev = match_frame(gt, gt)
    assert len(ev.matches) == 2
    assert ev.fp_ids == [] and ev.fn_ids == [] and ev.switches == []


def test_id_change_counts_one_switch():
    gt = boxes((1, (0, 0, 10, 10)))
    carry = {}
    ev1 = match_frame(gt, boxes((7, (0, 0, 10, 10))), carryover=carry)
    ev2 = match_frame(gt, boxes((8, (1, 0, 10, 10))), carryover=carry)
    assert ev1.switches == []
    assert ev2.switches == [1]


def test_carryover_preferred_over_higher_iou():
    # pred 7 held gt 1 last frame; it keeps it even though pred 8 overlaps more
    carry = {1: 7}
    gt = boxes((1, (0, 0, 10, 10)))
    pred = boxes((8, (0, 0, 10, 10)), (7, (2, 0, 10, 10)))
    ev = match_frame(gt, pred, carryover=carry)
    assert ev.matches == [(1, 7)]
    assert ev.fp_ids == [8]
    assert ev.switches == []


def test_switch_counted_across_gap():
    carry = {}
    gt = boxes((1, (0, 0, 10, 10)))
    match_frame(gt, boxes((7, (0, 0, 10, 10))), carryover=carry)
    match_frame(gt, [], carryover=carry)  # occlusion: FN, no match
    ev = match_frame(gt, boxes((9, (0, 0, 10, 10))), carryover=carry)
    assert ev.switches == [1]


def brute_force_events(gt, pred, iou_min, carryover):
    """Oracle: carryover first, then max EPSILON-matching by count then total IoU."""
    gt_ids = [g[0] for g in gt]
    pred_ids = [p[0] for p in pred]
    ga = np.array([g[1] for g in gt], float).reshape(len(gt), 4)
    pa = np.array([p[1] for p in pred], float).reshape(len(pred), 4)
    iou = _iou_matrix_numpy(ga, pa) if gt and pred else np.zeros((len(gt), len(pred)))

    pin = {pid: j for j, pid in enumerate(pred_ids)}
    keep = []
    for i, gid in enumerate(gt_ids):
        prev = carryover.get(gid)
        if prev in pin and pin[prev] not in [j for _, j in keep] and iou[i, pin[prev]] >= iou_min:
            keep.append((i, pin[prev]))
    free_g = [i for i in range(len(gt_ids)) if i not in [a for a, _ in keep]]
    free_p = [j for j in range(len(pred_ids)) if j not in [b for _, b in keep]]
    best = (len(keep), sum(iou[i, j] for i, j in keep), keep)
    kmax = min(len(free_g), len(free_p))
    for size in range(kmax, -1, -1):
        from itertools import combinations
        for gsub in combinations(free_g, size):
            for psub in permutations(free_p, size):
                pairs = [(i, j) for i, j in zip(gsub, psub) if iou[i, j] >= iou_min]
                if len(pairs) != size:
                    continue
                cand = keep + pairs
                score = (len(cand), sum(iou[i, j] for i, j in cand))
                if score > best[:2]:
                    best = (score[0], score[1], cand)
        if best[0] >= len(keep) + size:
            break
    n_match = best[0]
    switches = sum(
        1 for i, j in best[2]
        if gt_ids[i] in carryover and carryover[gt_ids[i]] != pred_ids[j]
    )
    for i, j in best[2]:
        carryover[gt_ids[i]] = pred_ids[j]
    return n_match, len(gt) - n_match, len(pred) - n_match, switches


def test_random_frames_match_brute_force_counts():
    rng = np.random.default_rng(31)
    for trial in range(60):
        carry_a, carry_b = {}, {}
        for _ in range(4):  # a few consecutive frames to exercise carryover
            gt = [
                (i + 1, tuple(rng.uniform(0, 80, 2)) + (12.0, 12.0))
                for i in range(int(rng.integers(1, 6)))
            ]
            pred = [
                (i + 10, tuple(rng.uniform(0, 80, 2)) + (12.0, 12.0))
                for i in range(int(rng.integers(0, 6)))
            ]
            ev = match_frame(gt, pred, carryover=carry_a)
            tp, fn, fp, sw = brute_force_events(gt, pred, 0.5, carry_b)
            assert len(ev.matches) == tp
            assert len(ev.fn_ids) == fn
            assert len(ev.fp_ids) == fp
            assert len(ev.switches) == sw


def test_iou_min_validation():
    with pytest.raises(ValidationError):
        match_frame([], [], iou_min=0.0)


# --- summarize -----------------------------------------------------------


def test_summary_bytetrack_counts():
    s = MotSummary.from_counts(fp=2214, fn=2615, id_switches=210, num_gt_objects=46479)
    assert round(100 * s.mota, 1) == 89.2
    assert abs(100 * s.mota - 89.2) < 0.05
    assert round(100 * s.precision, 1) == 95.2
    assert round(100 * s.recall, 1) == 94.4


def test_summary_reid_tracker_counts():
    s = MotSummary.from_counts(fp=783, fn=5367, id_switches=87, num_gt_objects=46479)
    assert round(100 * s.mota, 1) == 86.6
    assert abs(100 * s.mota - 86.6) < 0.05
    assert round(100 * s.precision, 1) == 98.1
    assert round(100 * s.recall, 1) == 88.5


def test_summary_perfect():
    s = MotSummary.from_counts(fp=0, fn=0, id_switches=0, num_gt_objects=100)
    assert s.mota == 1.0 and s.precision == 1.0 and s.recall == 1.0


def test_summary_zero_gt_raises():
    with pytest.raises(ValidationError):
        MotSummary.from_counts(fp=0, fn=0, id_switches=0, num_gt_objects=0)


def test_mota_recomputes_from_own_counts():
    s = MotSummary.from_counts(fp=17, fn=23, id_switches=3, num_gt_objects=400)
    assert s.mota == 1.0 - (s.fp + s.fn + s.id_switches) / s.num_gt_objects
    assert s.precision == s.tp / (s.tp + s.fp)
    assert s.recall == s.tp / (s.tp + s.fn)


# --- evaluate over sequences ------------------------------------------------


def seq(track_ids_per_frame):
    """Build pred records: {frame: [(tid, left)]} shorthand."""
    out = []
    for f, entries in track_ids_per_frame.items():
        for tid, left in entries:
            out.append(rec(f, tid, left, 0))
    return sorted(out, key=lambda r: (r.frame, r.track_id))


def test_evaluate_identical_is_perfect():
    gt = seq({0: [(1, 0), (2, 50)], 1: [(1, 3), (2, 53)]})
    s = evaluate(gt, gt)
    assert (s.fp, s.fn, s.id_switches) == (0, 0, 0)
    assert s.mota == 1.0


def test_evaluate_only_gt_frames_scored():
    # gt annotated every other frame; pred on in-between frames is ignored
    gt = seq({0: [(1, 0)], 2: [(1, 6)]})
    pred = seq({0: [(5, 0)], 1: [(9, 500)], 2: [(5, 6)]})
    s = evaluate(gt, pred)
    assert s.fp == 0 and s.fn == 0 and s.id_switches == 0


def test_evaluate_label_permutation_invariance():
    rng = np.random.default_rng(37)
    gt = seq({f: [(1, 3 * f), (2, 200 + 2 * f)] for f in range(20)})
    pred = seq({f: [(4, 3 * f + rng.uniform(-1, 1)), (9, 200 + 2 * f)] for f in range(20)})
    base = evaluate(gt, pred)
    remap = {4: 77, 9: 31}
    permuted = [
        TrackRecord(r.frame, remap[r.track_id], r.left, r.top, r.width, r.height,
                    r.confidence, r.class_id)
        for r in pred
    ]
    again = evaluate(gt, permuted)
    assert base == again


def test_extra_far_prediction_adds_one_fp():
    gt = seq({f: [(1, 3 * f)] for f in range(10)})
    pred_good = seq({f: [(2, 3 * f)] for f in range(10)})
    s0 = evaluate(gt, pred_good)
    pred_extra = sorted(
        pred_good + [rec(5, 99, 900, 900)], key=lambda r: (r.frame, r.track_id)
    )
    s1 = evaluate(gt, pred_extra)
    assert s1.fp == s0.fp + 1
    assert s1.precision < s0.precision
