"""Diagonal-covariance Gaussian mixture fitted by EM, used as the FV vocabulary."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from imrep import _kernels
from imrep.descriptors import DescriptorSet
from imrep.errors import DataError, NumericalError

# relative variance floor applied per dimension (times the data variance)
VARIANCE_FLOOR_FRAC = 1e-6
_ABS_FLOOR = 1e-12


@dataclass(frozen=True)
class GmmModel:
    means: np.ndarray  # (K, D)
    variances: np.ndarray  # (K, D), diagonal covariances
    weights: np.ndarray  # (K,)

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        variances = np.atleast_2d(np.asarray(self.variances, dtype=np.float64))
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if means.shape != variances.shape or means.shape[0] != weights.shape[0]:
            raise DataError("inconsistent GMM parameter shapes")
        if abs(weights.sum() - 1.0) > 1e-10:
            raise DataError("mixture weights must sum to 1")
        if np.any(weights <= 0.0):
            raise DataError("mixture weights must be positive")
        if np.any(variances <= 0.0):
            raise DataError("variances must be positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "weights", weights)

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, DescriptorSet):
        return data.descriptors
    return np.atleast_2d(np.asarray(data, dtype=np.float64))


def _log_densities(model: GmmModel, x: np.ndarray) -> np.ndarray:
    return _kernels.gmm_log_densities(
        np.ascontiguousarray(x),
        model.means,
        model.variances,
        np.log(model.weights),
    )


def _logsumexp(a: np.ndarray) -> np.ndarray:
    m = np.max(a, axis=1, keepdims=True)
    return (m + np.log(np.sum(np.exp(a - m), axis=1, keepdims=True)))[:, 0]


def posteriors_batch(model: GmmModel, x) -> np.ndarray:
    """Soft-assignment matrix (N, K); each row sums to 1."""
    x = _as_matrix(x)
    if x.shape[1] != model.dim:
        raise DataError(f"point dim {x.shape[1]} != model dim {model.dim}")
    logd = _log_densities(model, x)
    logd -= np.max(logd, axis=1, keepdims=True)
    q = np.exp(logd)
    q /= q.sum(axis=1, keepdims=True)
    return q


def posteriors(model: GmmModel, x) -> np.ndarray:
    """Component posteriors for a single point, computed in log space."""
    return posteriors_batch(model, np.asarray(x, dtype=np.float64)[None, :])[0]


def average_log_likelihood(model: GmmModel, x) -> float:
    x = _as_matrix(x)
    return float(np.mean(_logsumexp(_log_densities(model, x))))


def _kmeans_pp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centers[j] = x[rng.integers(n)]
            continue
        centers[j] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def fit_gmm(
    data,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-5,
) -> GmmModel:
    """Fit a K-component diagonal GMM with EM.

    Initialisation is seeded k-means++ followed by one hard-assignment
    M-step. EM stops at ``max_iters`` or when the relative change of the
    average log-likelihood drops below ``tol``. Collapsing components are
    kept alive by a per-dimension variance floor.
    """
    x = _as_matrix(data)
    n, d = x.shape
    if n < k:
        raise DataError(f"need at least {k} points to fit {k} components, got {n}")

    data_var = np.maximum(x.var(axis=0), _ABS_FLOOR)
    floor = np.maximum(VARIANCE_FLOOR_FRAC * data_var, _ABS_FLOOR)

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_centers(x, k, rng)

    # one hard-assignment M-step to seed means/variances/weights
    d2 = (
        np.sum(x * x, axis=1)[:, None]
        - 2.0 * x @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    assign = np.argmin(d2, axis=1)
    q = np.zeros((n, k), dtype=np.float64)
    q[np.arange(n), assign] = 1.0
    model = _m_step(x, q, centers, data_var, floor)

    prev_ll = -np.inf
    for _ in range(max_iters):
        logd = _log_densities(model, x)
        lse = _logsumexp(logd)
        ll = float(np.mean(lse))
        if not np.isfinite(ll):
            raise NumericalError("log-likelihood became non-finite during EM")
        q = np.exp(logd - lse[:, None])
        model = _m_step(x, q, model.means, data_var, floor)
        if np.isfinite(prev_ll) and abs(ll - prev_ll) < tol * max(abs(prev_ll), 1e-12):
            break
        prev_ll = ll
    return model


def _m_step(
    x: np.ndarray,
    q: np.ndarray,
    fallback_means: np.ndarray,
    data_var: np.ndarray,
    floor: np.ndarray,
) -> GmmModel:
    n = x.shape[0]
    s0, s1, s2 = _kernels.weighted_moments(
        np.ascontiguousarray(x), np.ascontiguousarray(q)
    )
    weights = np.maximum(s0 / n, 1e-12)
    weights /= weights.sum()

    dead = s0 <= 1e-10
    safe = np.where(dead, 1.0, s0)[:, None]
    means = np.where(dead[:, None], fallback_means, s1 / safe)
    variances = np.where(
        dead[:, None], data_var[None, :], s2 / safe - (s1 / safe) ** 2
    )
    variances = np.maximum(variances, floor[None, :])
    return GmmModel(means=means, variances=variances, weights=weights)
