"""Dense SIFT over a scale pyramid, with RootSIFT post-processing.

The descriptor is the standard 4x4 spatial grid of 8-bin gradient
orientation histograms (128-D). Spatial binning is bilinear: each pixel is
weighted by per-axis tents of half-width ``bin_size`` centred on the bin
centres, so the pooling window spans 5*bin_size - 1 pixels; a window is
sampled wherever that support fits inside the level. The per-pixel window
is flat by default ("fast" dense SIFT); a centred Gaussian window with
sigma = support/2 is available via ``window="gaussian"``.

RootSIFT: every raw histogram is L1-normalised, then square-rooted, which
leaves each nonzero descriptor with unit l2 norm. Zero-gradient windows
stay all-zero and keep their grid slot.
"""

from __future__ import annotations

import numpy as np

from imrep import _kernels
from imrep.descriptors.grid import (
    DenseSamplingParams,
    DescriptorSet,
    level_anchors,
    map_sites_to_source,
    pyramid_levels,
)
from imrep.errors import DataError
from imrep.image import RasterImage, gaussian_blur

N_ORIENTATIONS = 8
SIFT_DIM = 128

# gradient pre-smoothing at each pyramid level
_GRADIENT_SIGMA = 1.0


def orientation_planes(gray: np.ndarray) -> np.ndarray:
    """Soft-assign gradient magnitude into 8 circular orientation planes."""
    gy, gx = np.gradient(gray)
    mag = np.hypot(gx, gy)
    ang = np.arctan2(gy, gx)
    o = (ang % (2.0 * np.pi)) * (N_ORIENTATIONS / (2.0 * np.pi))
    planes = np.empty((N_ORIENTATIONS,) + gray.shape, dtype=np.float64)
    for b in range(N_ORIENTATIONS):
        dist = np.abs(o - b)
        dist = np.minimum(dist, N_ORIENTATIONS - dist)
        planes[b] = mag * np.maximum(0.0, 1.0 - dist)
    return planes


def root_sift(raw: np.ndarray) -> np.ndarray:
    """L1-normalise then square-root each row; zero rows pass through."""
    norms = np.sum(np.abs(raw), axis=1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    return np.sqrt(raw / safe)


def extract_dense_sift(
    image: RasterImage,
    params: DenseSamplingParams = DenseSamplingParams(),
    window: str = "flat",
) -> DescriptorSet:
    """Extract RootSIFT descriptors on a dense multi-scale grid.

    The image must be grayscale. Returns an empty set (not an error) when
    no window fits at any scale. Site coordinates are in the original image
    frame; site scale is the nominal patch size base_patch * scale_step**k
    divided by the upscale factor.
    """
    if image.channels != 1:
        raise DataError("extract_dense_sift expects a grayscale image")
    if window not in ("flat", "gaussian"):
        raise DataError(f"unknown window kind: {window!r}")

    bin_size = params.base_patch // 4
    support = 5 * bin_size - 1
    centre_off = (support - 1) / 2.0

    desc_parts = []
    site_parts = []
    for k, level in enumerate(pyramid_levels(image, params)):
        ax, ay = level_anchors(level.width, level.height, support, params.stride)
        if ax.shape[0] == 0:
            continue
        gray = gaussian_blur(level, _GRADIENT_SIGMA).data[:, :, 0]
        planes = orientation_planes(gray)
        if window == "flat":
            raw = _kernels.sift_pool_flat(planes, ax, ay, bin_size)
        else:
            raw = _kernels.sift_pool_gaussian(
                planes, ax, ay, bin_size, sigma=support / 2.0
            )
        desc_parts.append(root_sift(raw))
        nominal = params.base_patch * params.scale_step**k / params.upscale_factor
        site_parts.append(
            map_sites_to_source(
                ax + centre_off,
                ay + centre_off,
                level.width,
                level.height,
                image.width,
                image.height,
                nominal,
            )
        )

    if not desc_parts:
        return DescriptorSet.empty(SIFT_DIM)
    return DescriptorSet(np.concatenate(desc_parts), np.concatenate(site_parts))
