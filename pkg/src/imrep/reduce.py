"""PCA decorrelation/reduction of descriptors and spatial coordinate extension."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from imrep.descriptors import DescriptorSet
from imrep.errors import DataError

# eigenvalues below this fraction of the largest are treated as rank-deficient
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class PcaModel:
    """Orthonormal projection onto the leading variance directions."""

    mean: np.ndarray
    basis: np.ndarray  # (target_dim, input_dim), rows orthonormal

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).ravel()
        basis = np.atleast_2d(np.asarray(self.basis, dtype=np.float64))
        if basis.shape[1] != mean.shape[0]:
            raise DataError("basis width must match mean length")
        gram = basis @ basis.T
        if not np.allclose(gram, np.eye(basis.shape[0]), atol=1e-8):
            raise DataError("basis rows are not orthonormal")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "basis", basis)

    @property
    def input_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def target_dim(self) -> int:
        return self.basis.shape[0]


def _as_matrix(samples) -> np.ndarray:
    if isinstance(samples, DescriptorSet):
        return samples.descriptors
    return np.atleast_2d(np.asarray(samples, dtype=np.float64))


def fit_pca(
    samples,
    target_dim: int,
    seed: int = 0,
    sample_cap: int = 256_000,
) -> PcaModel:
    """Fit PCA on (a seeded subsample of) the given descriptors.

    Directions are ordered by decreasing eigenvalue of the sample
    covariance. When the data has rank below ``target_dim`` the trailing
    rows are an arbitrary orthonormal completion and a warning is issued.
    """
    x = _as_matrix(samples)
    n, d = x.shape
    if target_dim < 1 or target_dim > d:
        raise DataError(f"target_dim must be in [1, {d}], got {target_dim}")
    if n < target_dim:
        raise DataError(
            f"insufficient samples: {n} given, at least {target_dim} required"
        )
    if n > sample_cap:
        keep = np.random.default_rng(seed).choice(n, size=sample_cap, replace=False)
        keep.sort()
        x = x[keep]
        n = sample_cap

    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    rank = int(np.sum(eigvals > _RANK_TOL * max(eigvals[0], 1e-300)))
    if rank < target_dim:
        warnings.warn(
            f"rank-deficient data (rank {rank} < target {target_dim}); "
            "trailing directions are an orthonormal completion"
        )
    return PcaModel(mean=mean, basis=eigvecs[:, :target_dim].T)


def apply_pca(model: PcaModel, descriptors: DescriptorSet) -> DescriptorSet:
    """Project descriptors onto the PCA basis; sites pass through unchanged."""
    if descriptors.dim != model.input_dim:
        raise DataError(
            f"descriptor dim {descriptors.dim} != PCA input dim {model.input_dim}"
        )
    projected = (descriptors.descriptors - model.mean) @ model.basis.T
    return DescriptorSet(projected, descriptors.sites.copy())


def spatially_extend(
    descriptors: DescriptorSet, image_w: int, image_h: int
) -> DescriptorSet:
    """Append normalised site coordinates (x/W - 0.5, y/H - 0.5)."""
    if image_w < 1 or image_h < 1:
        raise DataError("image dimensions must be positive")
    xy = np.empty((len(descriptors), 2), dtype=np.float64)
    xy[:, 0] = descriptors.sites[:, 0] / image_w - 0.5
    xy[:, 1] = descriptors.sites[:, 1] / image_h - 0.5
    return DescriptorSet(
        np.concatenate([descriptors.descriptors, xy], axis=1),
        descriptors.sites.copy(),
    )
