"""One-vs-rest linear SVMs trained by dual coordinate descent.

Each class is a binary problem minimising

    0.5 ||w||^2 + C * sum_i max(0, 1 - y_i (<w, x_i> + b))

solved in the dual with the bias folded in as a constant feature of value
1 (so the bias is lightly regularised too). Coordinate passes visit the
examples in a seeded random order; training stops when the relative
duality gap falls below the tolerance. The dual objective is monotone
non-decreasing across epochs, which the caller can audit via the returned
history.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from imrep import _kernels
from imrep.errors import DataError
from imrep.fisher import FeatureVector

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0)
DEFAULT_TOL = 1e-4
MAX_EPOCHS = 1000

# harness lint: warn when inputs stray from unit norm by more than this
NORM_LINT_TOL = 1e-3


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # (n_classes, d)
    biases: np.ndarray  # (n_classes,)
    c: float
    classes: tuple

    def __post_init__(self):
        weights = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        biases = np.asarray(self.biases, dtype=np.float64).ravel()
        if weights.shape[0] != biases.shape[0] or weights.shape[0] != len(self.classes):
            raise DataError("inconsistent SVM model shapes")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(biases))):
            raise DataError("SVM model has non-finite entries")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]


def features_to_matrix(features) -> np.ndarray:
    if isinstance(features, np.ndarray):
        return np.atleast_2d(features.astype(np.float64))
    rows = [f.values if isinstance(f, FeatureVector) else np.asarray(f) for f in features]
    dims = {r.shape[0] for r in rows}
    if len(dims) > 1:
        raise DataError(f"mixed feature dims {sorted(dims)}")
    return np.asarray(rows, dtype=np.float64)


def lint_feature_norms(x: np.ndarray) -> None:
    """Warn when feature norms deviate from 1 (l2 normalisation expected)."""
    norms = np.linalg.norm(x, axis=1)
    off = np.abs(norms - 1.0) > NORM_LINT_TOL
    if off.any():
        warnings.warn(
            f"{int(off.sum())}/{len(norms)} feature vectors deviate from unit "
            "l2 norm; SVMs usually benefit from normalised inputs"
        )


def train_binary(
    x: np.ndarray,
    y: np.ndarray,
    c: float,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_epochs: int = MAX_EPOCHS,
):
    """Train one binary hinge SVM; returns (w, b, dual objective history)."""
    n, d = x.shape
    xb = np.ascontiguousarray(np.concatenate([x, np.ones((n, 1))], axis=1))
    y = np.ascontiguousarray(y, dtype=np.float64)
    qdiag = np.einsum("ij,ij->i", xb, xb)
    alpha = np.zeros(n, dtype=np.float64)
    w = np.zeros(d + 1, dtype=np.float64)
    rng = np.random.default_rng(seed)
    history = []

    for _ in range(max_epochs):
        order = rng.permutation(n).astype(np.int64)
        _kernels.svm_cd_epoch(xb, y, qdiag, alpha, w, float(c), order)
        margins = 1.0 - y * (xb @ w)
        primal = 0.5 * float(w @ w) + c * float(np.sum(np.maximum(margins, 0.0)))
        dual = float(alpha.sum()) - 0.5 * float(w @ w)
        history.append(dual)
        if primal - dual <= tol * max(abs(primal), 1e-12):
            break
    return w[:d].copy(), float(w[d]), history


def targets_from_labels(
    label_sets,
    classes,
    difficult_sets=None,
) -> np.ndarray:
    """Build an (N, C) matrix in {+1, -1, 0} from per-image label sets.

    An image difficult for class c (when provided) gets 0 there and is
    excluded from that class's training.
    """
    classes = list(classes)
    targets = -np.ones((len(label_sets), len(classes)), dtype=np.float64)
    for i, labels in enumerate(label_sets):
        for lab in labels:
            if lab in classes:
                targets[i, classes.index(lab)] = 1.0
    if difficult_sets is not None:
        for i, diff in enumerate(difficult_sets):
            for lab in diff:
                if lab in classes:
                    targets[i, classes.index(lab)] = 0.0
    return targets


def train_ovr(
    features,
    targets: np.ndarray,
    classes,
    c: float,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_epochs: int = MAX_EPOCHS,
) -> LinearModel:
    """Train one binary SVM per class on {+1, -1} targets (0 = excluded).

    Classes without a positive example are skipped with a warning and keep
    a zero weight vector.
    """
    x = features_to_matrix(features)
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if targets.shape != (x.shape[0], len(classes)):
        raise DataError(
            f"targets shape {targets.shape} != ({x.shape[0]}, {len(classes)})"
        )
    weights = np.zeros((len(classes), x.shape[1]))
    biases = np.zeros(len(classes))
    for j, name in enumerate(classes):
        keep = targets[:, j] != 0.0
        yj = targets[keep, j]
        if not np.any(yj > 0):
            warnings.warn(f"class {name!r} has no positive examples; skipped")
            continue
        weights[j], biases[j], _ = train_binary(
            x[keep], yj, c, seed=seed + j, tol=tol, max_epochs=max_epochs
        )
    return LinearModel(weights=weights, biases=biases, c=c, classes=tuple(classes))


def scores(model: LinearModel, features) -> np.ndarray:
    """Per-class decision values <w_c, phi> + b_c, shape (N, C)."""
    x = features_to_matrix(features)
    if x.shape[1] != model.feature_dim:
        raise DataError(
            f"feature dim {x.shape[1]} != model dim {model.feature_dim}"
        )
    return x @ model.weights.T + model.biases


def scores_grouped(model: LinearModel, features, groups) -> np.ndarray:
    """Scores averaged per group (sample fusion mode: one row per image)."""
    raw = scores(model, features)
    groups = np.asarray(groups)
    uniq = np.unique(groups)
    out = np.empty((uniq.shape[0], raw.shape[1]))
    for i, g in enumerate(uniq):
        out[i] = raw[groups == g].mean(axis=0)
    return out


def select_C(
    train_features,
    train_targets: np.ndarray,
    val_features,
    val_targets: np.ndarray,
    classes,
    grid=DEFAULT_C_GRID,
    metric: str = "map",
    seed: int = 0,
):
    """Pick the grid C maximising the validation metric (ties -> smaller C).

    Returns (best_c, model trained at best_c on the training split).
    """
    from imrep.evaluation import average_precision

    if len(grid) == 0:
        raise DataError("empty C grid")
    val_x = features_to_matrix(val_features)
    if val_x.shape[0] == 0:
        raise DataError("empty validation set")
    best = None
    for c in sorted(grid):
        model = train_ovr(train_features, train_targets, classes, c, seed=seed)
        s = scores(model, val_x)
        if metric == "accuracy":
            truth = np.argmax(val_targets, axis=1)
            value = float(np.mean(np.argmax(s, axis=1) == truth))
        elif metric == "map":
            aps = []
            for j in range(len(classes)):
                labelled = val_targets[:, j] != 0.0
                pos = val_targets[labelled, j] > 0
                if pos.any():
                    aps.append(average_precision(s[labelled, j], pos))
            if not aps:
                raise DataError("validation set has no positives for any class")
            value = float(np.mean(aps))
        else:
            raise DataError(f"unknown selection metric {metric!r}")
        if best is None or value > best[0]:
            best = (value, c, model)
    return best[1], best[2]
