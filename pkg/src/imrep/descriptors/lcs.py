"""Local colour statistics: per-cell mean/variance of Lab channels.

Each patch is split into an exact 4x4 grid of square cells (so the patch
side is base_patch, a multiple of 4). The 96-D descriptor is cell-major
(cells row-major by (row, col)), and within each cell ordered as
(mean L, mean a, mean b, var L, var a, var b). Variances are population
variances, clamped at zero against rounding.
"""

from __future__ import annotations

import numpy as np

from imrep.descriptors.grid import (
    DenseSamplingParams,
    DescriptorSet,
    level_anchors,
    map_sites_to_source,
    pyramid_levels,
)
from imrep.errors import DataError
from imrep.image import RasterImage

LCS_DIM = 96


def _integral(channel: np.ndarray) -> np.ndarray:
    out = np.zeros((channel.shape[0] + 1, channel.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(channel, axis=0), axis=1, out=out[1:, 1:])
    return out


def _rect_sum(ii: np.ndarray, x0, y0, size: int) -> np.ndarray:
    x1 = x0 + size
    y1 = y0 + size
    return ii[y1, x1] - ii[y1, x0] - ii[y0, x1] + ii[y0, x0]


def extract_lcs(
    image: RasterImage, params: DenseSamplingParams = DenseSamplingParams()
) -> DescriptorSet:
    """Extract 96-D colour-statistics descriptors on the dense grid.

    The input must be a 3-channel image in (rescaled) Lab; the extractor
    only checks the channel count. Sampling geometry mirrors the SIFT
    extractor (same pyramid and stride) with a patch of exactly base_patch
    pixels.
    """
    if image.channels != 3:
        raise DataError("extract_lcs expects a 3-channel (Lab) image")

    cell = params.base_patch // 4
    patch = params.base_patch
    ncell = cell * cell

    desc_parts = []
    site_parts = []
    for k, level in enumerate(pyramid_levels(image, params)):
        ax, ay = level_anchors(level.width, level.height, patch, params.stride)
        if ax.shape[0] == 0:
            continue
        integrals = [
            (_integral(level.data[:, :, c]), _integral(level.data[:, :, c] ** 2))
            for c in range(3)
        ]
        out = np.empty((ax.shape[0], LCS_DIM), dtype=np.float64)
        for cy in range(4):
            for cx in range(4):
                base = (cy * 4 + cx) * 6
                x0 = ax + cx * cell
                y0 = ay + cy * cell
                for c, (ii, ii2) in enumerate(integrals):
                    s1 = _rect_sum(ii, x0, y0, cell)
                    s2 = _rect_sum(ii2, x0, y0, cell)
                    mean = s1 / ncell
                    var = np.maximum(s2 / ncell - mean * mean, 0.0)
                    out[:, base + c] = mean
                    out[:, base + 3 + c] = var
        desc_parts.append(out)
        nominal = params.base_patch * params.scale_step**k / params.upscale_factor
        centre_off = (patch - 1) / 2.0
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
        return DescriptorSet.empty(LCS_DIM)
    return DescriptorSet(np.concatenate(desc_parts), np.concatenate(site_parts))
