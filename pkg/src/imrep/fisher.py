"""Fisher vector encoding with block normalisation variants and spatial schemes.

A raw encoding stacks, per mixture component k, the posterior-weighted
first- and second-order residual blocks

    u_k = 1/(N sqrt(pi_k))   sum_i q_ik (x_i - mu_k) / sigma_k
    v_k = 1/(N sqrt(2 pi_k)) sum_i q_ik [((x_i - mu_k) / sigma_k)^2 - 1]

into the layout [u_1, v_1, ..., u_K, v_K] of length 2KD. The "improved"
post-processing is either the classic double signed-square-root with two
global l2 normalisations, or a single signed-square-root followed by
per-component block l2 (intra-normalisation) and a final global l2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from imrep import _kernels
from imrep.descriptors import DescriptorSet
from imrep.errors import DataError
from imrep.gmm import GmmModel, posteriors_batch

NORMALISATIONS = ("classic_double_sqrt", "intra_norm_single_sqrt")
SPATIAL_SCHEMES = ("none", "pyramid", "extended")

# 1x1 + 3x1 + 2x2 subdivisions
PYRAMID_CELLS = 8

# posteriors below this are zeroed during accumulation
POSTERIOR_TRUNCATION = 1e-6

# colour descriptors are PCA-reduced to this dim before encoding
DEFAULT_COLOUR_DIM = 80


@dataclass(frozen=True)
class FisherConfig:
    k: int
    d: int
    normalisation: str = "intra_norm_single_sqrt"
    spatial: str = "none"
    # when False, pyramid cells are stacked raw and improved as one vector
    pyramid_cell_improve: bool = True

    def __post_init__(self):
        if self.normalisation not in NORMALISATIONS:
            raise DataError(f"unknown normalisation {self.normalisation!r}")
        if self.spatial not in SPATIAL_SCHEMES:
            raise DataError(f"unknown spatial scheme {self.spatial!r}")
        if self.k < 1 or self.d < 1:
            raise DataError("k and d must be positive")


@dataclass(frozen=True)
class FeatureVector:
    """An encoded image representation with provenance metadata."""

    values: np.ndarray
    l2_normalised: bool = False
    provenance: str = ""

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1:
            raise DataError("feature vector must be one-dimensional")
        if self.l2_normalised:
            norm = float(np.linalg.norm(values))
            if norm > 0.0 and abs(norm - 1.0) > 1e-6:
                raise DataError(f"l2_normalised vector has norm {norm}")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def signed_sqrt(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.sqrt(np.abs(values))


def l2_normalise(values: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(values)
    if norm == 0.0:
        return values
    return values / norm


def encode_fv_raw(model: GmmModel, descriptors: DescriptorSet) -> FeatureVector:
    """Accumulate the raw (unnormalised) Fisher vector of a descriptor set."""
    k, d = model.n_components, model.dim
    if len(descriptors) == 0:
        return FeatureVector(np.zeros(2 * k * d), provenance="fv-raw")
    x = descriptors.descriptors
    if x.shape[1] != d:
        raise DataError(f"descriptor dim {x.shape[1]} != model dim {d}")

    q = posteriors_batch(model, x)
    q[q < POSTERIOR_TRUNCATION] = 0.0
    s0, s1, s2 = _kernels.weighted_moments(
        np.ascontiguousarray(x), np.ascontiguousarray(q)
    )

    n = x.shape[0]
    mu = model.means
    sigma2 = model.variances
    sigma = np.sqrt(sigma2)
    pi = model.weights[:, None]

    u = (s1 - mu * s0[:, None]) / (n * np.sqrt(pi) * sigma)
    v = ((s2 - 2.0 * mu * s1 + mu * mu * s0[:, None]) / sigma2 - s0[:, None]) / (
        n * np.sqrt(2.0 * pi)
    )
    out = np.empty((k, 2 * d), dtype=np.float64)
    out[:, :d] = u
    out[:, d:] = v
    return FeatureVector(out.ravel(), provenance="fv-raw")


def improve(fv: FeatureVector, config: FisherConfig) -> FeatureVector:
    """Apply the configured normalisation to a raw encoding.

    classic_double_sqrt: signed sqrt, global l2, signed sqrt, global l2.
    intra_norm_single_sqrt: signed sqrt, l2 per (u_k, v_k) block, global l2.
    The zero vector passes through unchanged.
    """
    values = fv.values.astype(np.float64, copy=True)
    block = 2 * config.d
    if values.shape[0] % block != 0:
        raise DataError(
            f"encoding length {values.shape[0]} is not a multiple of 2*d={block}"
        )
    if config.normalisation == "classic_double_sqrt":
        values = signed_sqrt(values)
        values = l2_normalise(values)
        values = signed_sqrt(values)
        values = l2_normalise(values)
    else:
        values = signed_sqrt(values)
        blocks = values.reshape(-1, block)
        norms = np.linalg.norm(blocks, axis=1, keepdims=True)
        blocks /= np.where(norms > 0.0, norms, 1.0)
        values = l2_normalise(blocks.ravel())
    return FeatureVector(
        values, l2_normalised=True, provenance=fv.provenance + "+improved"
    )


def _cell_masks(sites: np.ndarray, image_w: int, image_h: int):
    """Boolean masks for the 8 pyramid cells, in stacking order.

    Order: full image; horizontal thirds top to bottom; quadrants row-major
    (top-left, top-right, bottom-left, bottom-right).
    """
    x = sites[:, 0]
    y = sites[:, 1]
    n = sites.shape[0]
    masks = [np.ones(n, dtype=bool)]
    third = np.minimum((y * 3.0 / image_h).astype(np.int64), 2)
    for i in range(3):
        masks.append(third == i)
    right = x >= image_w / 2.0
    bottom = y >= image_h / 2.0
    for row in (~bottom, bottom):
        for col in (~right, right):
            masks.append(row & col)
    return masks


def encode_spatial(
    model: GmmModel,
    descriptors: DescriptorSet,
    config: FisherConfig,
    image_w: int,
    image_h: int,
) -> FeatureVector:
    """Spatial-pyramid encoding: 8 cell encodings stacked, then global l2."""
    if config.spatial != "pyramid":
        raise DataError("encode_spatial requires spatial='pyramid'")
    k, d = model.n_components, model.dim
    base = 2 * k * d
    parts = []
    for mask in _cell_masks(descriptors.sites, image_w, image_h):
        if len(descriptors) == 0 or not mask.any():
            parts.append(np.zeros(base))
            continue
        sub = DescriptorSet(
            descriptors.descriptors[mask], descriptors.sites[mask]
        )
        raw = encode_fv_raw(model, sub)
        parts.append(improve(raw, config).values if config.pyramid_cell_improve else raw.values)
    stacked = np.concatenate(parts)
    if not config.pyramid_cell_improve:
        stacked = improve(FeatureVector(stacked), config).values
    return FeatureVector(
        l2_normalise(stacked), l2_normalised=True, provenance="fv-pyramid"
    )


def encode(
    model: GmmModel,
    descriptors: DescriptorSet,
    config: FisherConfig,
    image_w: int = 0,
    image_h: int = 0,
) -> FeatureVector:
    """Encode per the configured spatial scheme (descriptors already carry
    the (x, y) extension when spatial='extended')."""
    if config.spatial == "pyramid":
        return encode_spatial(model, descriptors, config, image_w, image_h)
    return improve(encode_fv_raw(model, descriptors), config)


def stack_normalised(parts: list[FeatureVector], provenance: str = "stack") -> FeatureVector:
    """Concatenate encodings and re-apply a global l2 normalisation."""
    if not parts:
        raise DataError("nothing to stack")
    values = np.concatenate([p.values for p in parts])
    return FeatureVector(l2_normalise(values), l2_normalised=True, provenance=provenance)


def fv_dimension(
    config: FisherConfig,
    colour_stack: bool = False,
    colour_dim: int = DEFAULT_COLOUR_DIM,
) -> int:
    """Exact output dimensionality of a Fisher-vector configuration."""
    base = 2 * config.k * config.d
    if config.spatial == "pyramid":
        base *= PYRAMID_CELLS
    if colour_stack:
        base += 2 * config.k * colour_dim
    return base
