"""Evaluation measures: average precision / mAP, top-k error, class accuracy.

Average precision follows the integral definition (precision summed at the
positive ranks, divided by the number of positives) with descending stable
sort so score ties resolve by input order. The 11-point interpolated
variant is available behind a flag for comparability with older protocols.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from imrep.errors import DataError


@dataclass(frozen=True)
class EvalResult:
    per_class_ap: dict = field(default_factory=dict)
    map_score: float | None = None
    top_k_error: float | None = None
    mean_class_accuracy: float | None = None
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, value in [
            ("mAP", self.map_score),
            ("top_k_error", self.top_k_error),
            ("mean_class_accuracy", self.mean_class_accuracy),
        ]:
            if value is not None and not 0.0 <= value <= 1.0:
                raise DataError(f"{name} outside [0, 1]: {value}")
        if self.per_class_ap and self.map_score is not None:
            mean = float(np.mean(list(self.per_class_ap.values())))
            if abs(mean - self.map_score) > 1e-9:
                raise DataError("mAP must equal the mean of per-class APs")


def _ranking(scores: np.ndarray) -> np.ndarray:
    return np.argsort(-scores, kind="stable")


def average_precision(
    scores, positives, eleven_point: bool = False
) -> float:
    """AP of a score-ranked list against boolean relevance flags."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    positives = np.asarray(positives, dtype=bool).ravel()
    if scores.shape != positives.shape:
        raise DataError("scores and positives must have equal length")
    npos = int(positives.sum())
    if npos == 0:
        raise DataError("average precision undefined without positives")

    ranked = positives[_ranking(scores)]
    hits = np.cumsum(ranked)
    ranks = np.arange(1, ranked.shape[0] + 1)
    precision = hits / ranks
    if not eleven_point:
        return float(precision[ranked].sum() / npos)

    recall = hits / npos
    total = 0.0
    for r in np.linspace(0.0, 1.0, 11):
        mask = recall >= r - 1e-12
        total += float(precision[mask].max()) if mask.any() else 0.0
    return total / 11.0


def top_k_error(scores: np.ndarray, truth, k: int) -> float:
    """Fraction of samples whose true label misses the k best scores."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if k < 1 or k > scores.shape[1]:
        raise DataError(f"k must be in [1, {scores.shape[1]}]")
    if truth.shape[0] != scores.shape[0]:
        raise DataError("one true label per sample required")
    misses = 0
    for i in range(scores.shape[0]):
        top = _ranking(scores[i])[:k]
        if truth[i] not in top:
            misses += 1
    return misses / scores.shape[0]


def mean_class_accuracy(predictions, truth, classes) -> float:
    """Unweighted mean over classes of per-class prediction accuracy.

    Classes absent from the truth labels are excluded with a warning.
    """
    predictions = np.asarray(predictions).ravel()
    truth = np.asarray(truth).ravel()
    if predictions.shape != truth.shape:
        raise DataError("predictions and truth must have equal length")
    accs = []
    for c in classes:
        mask = truth == c
        if not mask.any():
            warnings.warn(f"class {c!r} has no test samples; excluded")
            continue
        accs.append(float(np.mean(predictions[mask] == c)))
    if not accs:
        raise DataError("no class has test samples")
    return float(np.mean(accs))


def evaluate_multilabel(
    scores: np.ndarray, targets: np.ndarray, classes, k: int | None = None
) -> EvalResult:
    """Per-class AP/mAP from a score matrix and {+1,-1,0} targets."""
    scores = np.atleast_2d(scores)
    per_class = {}
    for j, name in enumerate(classes):
        labelled = targets[:, j] != 0.0
        pos = targets[labelled, j] > 0
        if not pos.any():
            warnings.warn(f"class {name!r} has no test positives; excluded")
            continue
        per_class[name] = average_precision(scores[labelled, j], pos)
    if not per_class:
        raise DataError("no class has test positives")
    result_map = float(np.mean(list(per_class.values())))
    counts = {"samples": int(scores.shape[0]), "classes": len(per_class)}
    return EvalResult(per_class_ap=per_class, map_score=result_map, counts=counts)


def evaluate_singlelabel(
    scores: np.ndarray, truth, classes, k: int = 5
) -> EvalResult:
    """Top-k error and mean class accuracy from a score matrix."""
    scores = np.atleast_2d(scores)
    truth = np.asarray(truth, dtype=np.int64).ravel()
    k = min(k, scores.shape[1])
    preds = np.argmax(scores, axis=1)
    acc = mean_class_accuracy(preds, truth, list(range(len(classes))))
    err = top_k_error(scores, truth, k)
    counts = {"samples": int(scores.shape[0]), "classes": len(classes)}
    return EvalResult(
        top_k_error=err, mean_class_accuracy=acc, counts=counts
    )
