"""Numeric hot kernels: assignment solve, embedding distance, IoU, tree fitting.

Each kernel exists in two flavors: a numba ``@njit``-compiled version and a
pure numpy/Python fallback. Selection happens once at import time:

* ``TOOLTRACK_NUMBA=0`` (or ``false``/``off``) forces the fallback path;
* otherwise numba is used when importable.

``lap_solve``, ``fit_tree`` and ``predict_tree`` JIT-compile the same source
as their fallbacks, so both paths are bit-identical. ``min_euclidean`` and
``iou_matrix`` have vectorized numpy fallbacks; results match the compiled
loop to float rounding (~1e-12 relative). ``benchmarks/bench_kernels.py``
times the two paths side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

_env = os.environ.get("TOOLTRACK_NUMBA", "auto").strip().lower()
_want_numba = _env not in ("0", "false", "off", "no")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAS_NUMBA = False

NUMBA_ENABLED = _want_numba and HAS_NUMBA


def _lap_solve_py(cost):
    """Solve the square linear assignment problem, minimizing total cost.

    Shortest augmenting path with row/column potentials, O(n^3). Ties are
    broken toward the lowest column index, so results are deterministic.
    Returns ``assign`` with ``assign[row] = col``.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=np.bool_)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assign = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        if p[j] > 0:
            assign[p[j] - 1] = j - 1
    return assign


def _min_euclidean_loop(gallery, query):
    """Minimum Euclidean distance from query to any gallery row."""
    best = np.inf
    for g in range(gallery.shape[0]):
        s = 0.0
        for k in range(gallery.shape[1]):
            d = gallery[g, k] - query[k]
            s += d * d
        if s < best:
            best = s
    return math.sqrt(best)


def _min_euclidean_numpy(gallery, query):
    diff = gallery - query[None, :]
    return float(np.sqrt(np.min(np.einsum("ij,ij->i", diff, diff))))


def _iou_matrix_loop(a, b):
    """Pairwise IoU of (left, top, w, h) boxes: a (n,4) x b (m,4) -> (n,m)."""
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n, m))
    for i in range(n):
        ax1 = a[i, 0]
        ay1 = a[i, 1]
        ax2 = a[i, 0] + a[i, 2]
        ay2 = a[i, 1] + a[i, 3]
        area_a = a[i, 2] * a[i, 3]
        for j in range(m):
            bx1 = b[j, 0]
            by1 = b[j, 1]
            bx2 = b[j, 0] + b[j, 2]
            by2 = b[j, 1] + b[j, 3]
            iw = min(ax2, bx2) - max(ax1, bx1)
            if iw <= 0.0:
                continue
            ih = min(ay2, by2) - max(ay1, by1)
            if ih <= 0.0:
                continue
            inter = iw * ih
            union = area_a + b[j, 2] * b[j, 3] - inter
            if union > 0.0:
                out[i, j] = inter / union
    return out


def _iou_matrix_numpy(a, b):
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = ax1 + a[:, 2:3], ay1 + a[:, 3:4]
    bx1, by1 = b[None, :, 0], b[None, :, 1]
    bx2, by2 = bx1 + b[None, :, 2], by1 + b[None, :, 3]
    iw = np.clip(np.minimum(ax2, bx2) - np.maximum(ax1, bx1), 0.0, None)
    ih = np.clip(np.minimum(ay2, by2) - np.maximum(ay1, by1), 0.0, None)
    inter = iw * ih
    union = a[:, 2:3] * a[:, 3:4] + (b[None, :, 2] * b[None, :, 3]) - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


# Tree node layout: feature[k] < 0 marks a leaf whose class is pred[k].
def _fit_tree_py(X, y, sample_idx, feat_pool, min_leaf, max_depth):
    """Grow one CART (Gini) tree on the given bootstrap sample.

    feat_pool[k] holds the candidate feature ids for node k, pre-drawn by the
    caller so the whole fit is a pure function of its arguments. max_depth <= 0
    means unlimited. Returns (feature, threshold, left, right, pred, n_nodes).
    """
    m = sample_idx.shape[0]
    max_nodes = 2 * m + 1
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    pred = np.zeros(max_nodes, dtype=np.int64)

    buf = sample_idx.copy()
    # stack rows: node id, lo, hi, depth
    stack = np.zeros((max_nodes, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack[top, 0]
        lo = stack[top, 1]
        hi = stack[top, 2]
        depth = stack[top, 3]
        n_node = hi - lo
        ones = 0
        for t in range(lo, hi):
            ones += y[buf[t]]
        # majority vote; exact tie -> class 0 (low)
        pred[node] = 1 if 2 * ones > n_node else 0

        if ones == 0 or ones == n_node or n_node < 2 * min_leaf:
            continue
        if max_depth > 0 and depth >= max_depth:
            continue

        p1 = ones / n_node
        gini_parent = 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1)
        best_gain = 1e-12
        best_feat = -1
        best_thr = 0.0

        vals = np.empty(n_node)
        labels = np.empty(n_node, dtype=np.int64)
        for c in range(feat_pool.shape[1]):
            f = feat_pool[node, c]
            for t in range(n_node):
                vals[t] = X[buf[lo + t], f]
            order = np.argsort(vals)
            for t in range(n_node):
                labels[t] = y[buf[lo + order[t]]]
            left_ones = 0
            for cut in range(n_node - 1):
                left_ones += labels[cut]
                nl = cut + 1
                if vals[order[cut + 1]] <= vals[order[cut]]:
                    continue
                nr = n_node - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                pl = left_ones / nl
                pr = (ones - left_ones) / nr
                gini_l = 1.0 - pl * pl - (1.0 - pl) * (1.0 - pl)
                gini_r = 1.0 - pr * pr - (1.0 - pr) * (1.0 - pr)
                gain = gini_parent - (nl * gini_l + nr * gini_r) / n_node
                if gain > best_gain:
                    best_gain = gain
                    best_feat = f
                    best_thr = (vals[order[cut]] + vals[order[cut + 1]]) / 2.0
        if best_feat < 0:
            continue

        # stable partition of buf[lo:hi] around the chosen threshold
        lefts = np.empty(n_node, dtype=np.int64)
        rights = np.empty(n_node, dtype=np.int64)
        nl = 0
        nr = 0
        for t in range(lo, hi):
            v = buf[t]
            if X[v, best_feat] <= best_thr:
                lefts[nl] = v
                nl += 1
            else:
                rights[nr] = v
                nr += 1
        for t in range(nl):
            buf[lo + t] = lefts[t]
        for t in range(nr):
            buf[lo + nl + t] = rights[t]

        feature[node] = best_feat
        threshold[node] = best_thr
        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        left[node] = left_id
        right[node] = right_id
        stack[top, 0] = right_id
        stack[top, 1] = lo + nl
        stack[top, 2] = hi
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = left_id
        stack[top, 1] = lo
        stack[top, 2] = lo + nl
        stack[top, 3] = depth + 1
        top += 1

    return feature, threshold, left, right, pred, n_nodes


def _predict_tree_py(feature, threshold, left, right, pred, X):
    """Class votes of one tree for each row of X."""
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = pred[node]
    return out


if NUMBA_ENABLED:
    lap_solve = njit(cache=True)(_lap_solve_py)
    min_euclidean = njit(cache=True)(_min_euclidean_loop)
    iou_matrix = njit(cache=True)(_iou_matrix_loop)
    fit_tree = njit(cache=True)(_fit_tree_py)
    predict_tree = njit(cache=True)(_predict_tree_py)
else:
    lap_solve = _lap_solve_py
    min_euclidean = _min_euclidean_numpy
    iou_matrix = _iou_matrix_numpy
    fit_tree = _fit_tree_py
    predict_tree = _predict_tree_py


def warmup() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs."""
    c = np.array([[1.0, 2.0], [2.0, 1.0]])
    lap_solve(c)
    min_euclidean(np.zeros((2, 3)), np.zeros(3))
    iou_matrix(np.array([[0.0, 0.0, 1.0, 1.0]]), np.array([[0.0, 0.0, 1.0, 1.0]]))
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1], dtype=np.int64)
    idx = np.arange(4, dtype=np.int64)
    pool = np.zeros((9, 1), dtype=np.int64)
    tree = fit_tree(X, y, idx, pool, 1, 0)
    predict_tree(tree[0], tree[1], tree[2], tree[3], tree[4], X)
