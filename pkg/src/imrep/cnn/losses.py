"""Classification losses on class scores: softmax cross-entropy and the
one-vs-rest / ranking hinge losses used for multi-label fine-tuning.

Hinge targets are (N, C) matrices with +1 for positives, -1 for negatives
and 0 for entries to ignore. Values are plain sums over the stated terms;
gradients are subgradients w.r.t. the scores.
"""

from __future__ import annotations

import numpy as np

from imrep.cnn.layers import softmax_forward
from imrep.errors import DataError

LOSS_KINDS = ("softmax_ce", "hinge_cls", "hinge_rank")


def loss(scores: np.ndarray, labels: np.ndarray, kind: str):
    """Returns (value, gradient w.r.t. scores)."""
    if kind == "softmax_ce":
        return softmax_ce(scores, labels)
    if kind == "hinge_cls":
        return hinge_cls(scores, labels)
    if kind == "hinge_rank":
        return hinge_rank(scores, labels)
    raise DataError(f"unknown loss kind {kind!r}")


def softmax_ce(scores: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch; labels are integer class ids."""
    n = scores.shape[0]
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise DataError("softmax_ce expects one integer label per sample")
    p = softmax_forward(scores.astype(np.float64))
    eps = np.finfo(np.float64).tiny
    value = float(-np.mean(np.log(p[np.arange(n), labels] + eps)))
    grad = p
    grad[np.arange(n), labels] -= 1.0
    return value, (grad / n).astype(scores.dtype)


def hinge_cls(scores: np.ndarray, targets: np.ndarray):
    """Per class: sum over positives of max(0, 1 - s) plus sum over
    negatives of max(0, 1 + s); summed over classes."""
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != scores.shape:
        raise DataError("hinge targets must match the score matrix shape")
    s = scores.astype(np.float64)
    margin = 1.0 - y * s
    active = (margin > 0.0) & (y != 0.0)
    value = float(np.sum(margin[active]))
    grad = np.where(active, -y, 0.0)
    return value, grad.astype(scores.dtype)


def hinge_rank(scores: np.ndarray, targets: np.ndarray):
    """Per class, sum over (positive, negative) batch pairs of
    max(0, 1 - s_pos + s_neg). Classes with no positive (or no negative)
    in the batch contribute zero."""
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != scores.shape:
        raise DataError("hinge targets must match the score matrix shape")
    s = scores.astype(np.float64)
    value = 0.0
    grad = np.zeros_like(s)
    for c in range(s.shape[1]):
        pos = np.flatnonzero(y[:, c] > 0)
        neg = np.flatnonzero(y[:, c] < 0)
        if pos.size == 0 or neg.size == 0:
            continue
        margins = 1.0 - s[pos, c][:, None] + s[neg, c][None, :]
        viol = margins > 0.0
        value += float(margins[viol].sum())
        grad[pos, c] -= viol.sum(axis=1)
        grad[neg, c] += viol.sum(axis=0)
    return value, grad.astype(scores.dtype)
