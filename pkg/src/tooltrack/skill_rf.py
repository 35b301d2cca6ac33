"""Feature-based skill classification: random forest + cross-validation.

A from-scratch random forest (CART trees, Gini impurity, bootstrap samples,
per-node feature subsampling) classifies videos into low (0) / high (1)
efficiency. Evaluation is stratified k-fold cross-validation with random
oversampling of the minority class inside each training fold only, pooled
held-out metrics, Cohen's kappa, and a label-permutation test on accuracy
for the p-value.

All randomness is derived from the config seed: each forest draws its
bootstrap indices and per-node feature pools up front from one generator,
row i belonging to tree i, so results do not depend on execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import StratificationError, ToolTrackError, ValidationError

LOW, HIGH = 0, 1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    max_depth: int | None = None          # None = unlimited
    features_per_split: int | None = None  # None = ceil(sqrt(F))
    min_leaf: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValidationError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValidationError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValidationError("max_depth must be >= 1 or None")


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    accuracy: float
    kappa: float
    p_value: float

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "accuracy": self.accuracy,
            "kappa": self.kappa,
            "p_value": self.p_value,
        }


@dataclass
class _Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    pred: np.ndarray


@dataclass
class ForestModel:
    trees: list[_Tree]
    n_features: int
    config: ForestConfig

    def votes(self, X: np.ndarray) -> np.ndarray:
        """Count of trees voting high for each row of X."""
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
        if X.shape[1] != self.n_features:
            raise ValidationError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        total = np.zeros(X.shape[0], dtype=np.int64)
        for t in self.trees:
            total += kernels.predict_tree(t.feature, t.threshold, t.left,
                                          t.right, t.pred, X)
        return total

    def to_dict(self) -> dict:
        """Serialized structure; equal for equal training inputs and seed."""
        return {
            "n_features": self.n_features,
            "n_trees": len(self.trees),
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "pred": t.pred.tolist(),
                }
                for t in self.trees
            ],
        }


def _features_per_split(cfg: ForestConfig, n_features: int) -> int:
    k = cfg.features_per_split
    if k is None:
        k = math.ceil(math.sqrt(n_features))
    if not 1 <= k <= n_features:
        raise ValidationError(
            f"features_per_split {k} outside [1, {n_features}]"
        )
    return k


def _fit(X: np.ndarray, y: np.ndarray, cfg: ForestConfig,
         seed_path: tuple[int, ...]) -> ForestModel:
    n, n_feat = X.shape
    k = _features_per_split(cfg, n_feat)
    depth = cfg.max_depth if cfg.max_depth is not None else 0
    max_nodes = 2 * n + 1
    rng = np.random.default_rng(seed_path)
    boots = rng.integers(0, n, (cfg.n_trees, n)).astype(np.int64)
    pools = np.argsort(rng.random((cfg.n_trees, max_nodes, n_feat)), axis=2)
    pools = np.ascontiguousarray(pools[:, :, :k], dtype=np.int64)
    trees = []
    for i in range(cfg.n_trees):
        feature, threshold, left, right, pred, n_nodes = kernels.fit_tree(
            X, y, boots[i], pools[i], cfg.min_leaf, depth
        )
        trees.append(
            _Tree(
                feature=feature[:n_nodes].copy(),
                threshold=threshold[:n_nodes].copy(),
                left=left[:n_nodes].copy(),
                right=right[:n_nodes].copy(),
                pred=pred[:n_nodes].copy(),
            )
        )
    return ForestModel(trees=trees, n_features=n_feat, config=cfg)


def _check_training_data(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValidationError("X must be (n, F) with one label per row")
    if not np.all(np.isfinite(X)):
        raise ValidationError("undefined (non-finite) feature values")
    if not set(np.unique(y)) <= {LOW, HIGH}:
        raise ValidationError("labels must be 0 (low) or 1 (high)")
    counts = np.bincount(y, minlength=2)
    if counts[LOW] < 2 or counts[HIGH] < 2:
        raise ValidationError("need at least 2 samples of each class")


def train_forest(X: np.ndarray, y: Sequence[int], cfg: ForestConfig) -> ForestModel:
    """Grow the forest on the full data; deterministic under cfg.rng_seed."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _check_training_data(X, y)
    return _fit(X, y, cfg, (cfg.rng_seed,))


def predict(model: ForestModel, x: np.ndarray) -> tuple[int, float]:
    """Majority vote for one sample: (class, fraction of trees voting high).

    An exact tie predicts low."""
    votes = int(model.votes(np.atleast_2d(x))[0])
    n = len(model.trees)
    label = HIGH if 2 * votes > n else LOW
    return label, votes / n


def classification_metrics(tp: int, fn: int, fp: int, tn: int) -> dict:
    """Precision/recall/accuracy/kappa from a pooled confusion matrix.

    High (1) is the positive class. Kappa uses marginal-based expected
    agreement; degenerate marginals (p_e = 1) give kappa 0.
    """
    n = tp + fn + fp + tn
    if n == 0:
        raise ValidationError("empty confusion matrix")
    accuracy = (tp + tn) / n
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    p_e = ((tp + fn) * (tp + fp) + (tn + fp) * (tn + fn)) / (n * n)
    kappa = (accuracy - p_e) / (1.0 - p_e) if 1.0 - p_e > 1e-12 else 0.0
    return {
        "precision": precision,
        "recall": recall,
        "accuracy": accuracy,
        "kappa": kappa,
    }


def stratified_fold_indices(y: np.ndarray, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Deal each class round-robin into k folds after a seeded shuffle."""
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (LOW, HIGH):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        for pos, sample in enumerate(idx):
            folds[pos % k].append(int(sample))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def oversample_indices(train_idx: np.ndarray, y: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
    """Balance classes by re-drawing minority indices with replacement."""
    y_tr = y[train_idx]
    counts = np.bincount(y_tr, minlength=2)
    if counts[LOW] == 0 or counts[HIGH] == 0 or counts[LOW] == counts[HIGH]:
        return train_idx
    minority = LOW if counts[LOW] < counts[HIGH] else HIGH
    pool = train_idx[y_tr == minority]
    extra = rng.choice(pool, size=int(abs(counts[HIGH] - counts[LOW])), replace=True)
    return np.concatenate([train_idx, extra])


@dataclass
class CvDetails:
    fold_indices: list[np.ndarray]          # held-out indices per fold
    train_indices: list[np.ndarray]         # pre-oversampling train indices
    oversampled_indices: list[np.ndarray]   # actual training indices used
    predictions: np.ndarray                 # pooled held-out predictions
    confusion: dict                          # tp/fn/fp/tn


def _pooled_accuracy(X: np.ndarray, y_fit: np.ndarray, y_score: np.ndarray,
                     folds: list[np.ndarray], cfg: ForestConfig,
                     seed_path: tuple[int, ...],
                     rng_os: np.random.Generator,
                     predictions_out: np.ndarray | None = None) -> float:
    """CV accuracy of predictions (trained on y_fit) scored against y_score."""
    n = X.shape[0]
    correct = 0
    for f, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(n), test_idx)
        if len(set(train_idx) & set(test_idx)) != 0:
            raise ToolTrackError("fold leakage: train/test overlap")
        train_used = oversample_indices(train_idx, y_fit, rng_os)
        model = _fit(np.ascontiguousarray(X[train_used]),
                     np.ascontiguousarray(y_fit[train_used]),
                     cfg, (*seed_path, f))
        votes = model.votes(X[test_idx])
        pred = (2 * votes > cfg.n_trees).astype(np.int64)
        if predictions_out is not None:
            predictions_out[test_idx] = pred
        correct += int(np.count_nonzero(pred == y_score[test_idx]))
    return correct / n


def cross_validate(X: np.ndarray, y: Sequence[int], cfg: ForestConfig,
                   k: int = 5, n_permutations: int = 10_000,
                   return_details: bool = False):
    """Stratified k-fold evaluation with oversampled training folds.

    Returns an EvalReport; with return_details=True, a (report, CvDetails)
    pair. The p-value is (1 + #{permuted accuracy >= observed}) / (P + 1)
    over label permutations re-run through the same folds.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _check_training_data(X, y)
    n = X.shape[0]
    if n < k:
        raise ValidationError(f"dataset size {n} smaller than k={k}")

    master = np.random.SeedSequence(cfg.rng_seed)
    fold_ss, os_ss, perm_ss = master.spawn(3)
    folds = stratified_fold_indices(y, k, np.random.default_rng(fold_ss))
    for f, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(n), test_idx)
        if len(np.unique(y[train_idx])) < 2:
            raise StratificationError(f"training fold {f} has a single class")

    predictions = np.full(n, -1, dtype=np.int64)
    rng_os = np.random.default_rng(os_ss)
    observed = _pooled_accuracy(X, y, y, folds, cfg, (cfg.rng_seed, 0),
                                rng_os, predictions_out=predictions)

    rng_perm = np.random.default_rng(perm_ss)
    exceed = 0
    for p in range(n_permutations):
        y_perm = y[rng_perm.permutation(n)]
        acc = _pooled_accuracy(X, y_perm, y_perm, folds, cfg,
                               (cfg.rng_seed, 1 + p), rng_perm)
        if acc >= observed - 1e-12:
            exceed += 1
    p_value = (1 + exceed) / (n_permutations + 1)

    tp = int(np.count_nonzero((predictions == HIGH) & (y == HIGH)))
    fp = int(np.count_nonzero((predictions == HIGH) & (y == LOW)))
    fn = int(np.count_nonzero((predictions == LOW) & (y == HIGH)))
    tn = int(np.count_nonzero((predictions == LOW) & (y == LOW)))
    metrics = classification_metrics(tp, fn, fp, tn)
    report = EvalReport(
        precision=metrics["precision"],
        recall=metrics["recall"],
        accuracy=metrics["accuracy"],
        kappa=metrics["kappa"],
        p_value=p_value,
    )
    if not return_details:
        return report

    train_lists, os_lists = [], []
    rng_os2 = np.random.default_rng(os_ss)
    for test_idx in folds:
        train_idx = np.setdiff1d(np.arange(n), test_idx)
        train_lists.append(train_idx)
        os_lists.append(oversample_indices(train_idx, y, rng_os2))
    details = CvDetails(
        fold_indices=folds,
        train_indices=train_lists,
        oversampled_indices=os_lists,
        predictions=predictions,
        confusion={"tp": tp, "fn": fn, "fp": fp, "tn": tn},
    )
    return report, details
