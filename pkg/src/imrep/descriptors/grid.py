"""Dense sampling geometry shared by the SIFT and colour extractors.

Multi-scale extraction works on an image pyramid: the input is first
upscaled by ``upscale_factor``, then repeatedly shrunk by ``scale_step``.
Each level is sampled with a fixed-size window on a fixed-stride grid, so a
window of ``base_patch`` pixels at level k covers base_patch * scale_step**k
pixels of the upscaled image. Site coordinates are always reported in the
frame of the original (pre-upscale) image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from imrep.errors import DataError
from imrep.image import RasterImage, gaussian_blur, resize_bilinear

# anti-alias smoothing applied before each pyramid downsample
_PYRAMID_SIGMA = 0.7


@dataclass(frozen=True)
class DenseSamplingParams:
    stride: int = 3
    num_scales: int = 7
    scale_step: float = math.sqrt(2.0)
    upscale_factor: int = 2
    base_patch: int = 24

    def __post_init__(self):
        if self.stride < 1:
            raise DataError("stride must be >= 1")
        if self.num_scales < 1:
            raise DataError("num_scales must be >= 1")
        if self.scale_step <= 1.0:
            raise DataError("scale_step must be > 1")
        if self.upscale_factor < 1:
            raise DataError("upscale_factor must be >= 1")
        if self.base_patch < 4 or self.base_patch % 4 != 0:
            raise DataError("base_patch must be a positive multiple of 4")


@dataclass(frozen=True)
class DescriptorSet:
    """Local descriptors plus their (x, y, scale) sites.

    ``descriptors`` is (N, D) float64; ``sites`` is (N, 3) float64 holding
    x, y in source-image pixels and the nominal patch scale.
    """

    descriptors: np.ndarray
    sites: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        desc = np.atleast_2d(np.asarray(self.descriptors, dtype=np.float64))
        sites = self.sites
        if sites is None:
            sites = np.zeros((desc.shape[0], 3), dtype=np.float64)
        sites = np.asarray(sites, dtype=np.float64).reshape(-1, 3)
        if desc.shape[0] != sites.shape[0]:
            raise DataError(
                f"{desc.shape[0]} descriptors but {sites.shape[0]} sites"
            )
        object.__setattr__(self, "descriptors", desc)
        object.__setattr__(self, "sites", sites)

    @property
    def dim(self) -> int:
        return self.descriptors.shape[1]

    def __len__(self) -> int:
        return self.descriptors.shape[0]

    @staticmethod
    def empty(dim: int) -> "DescriptorSet":
        return DescriptorSet(
            np.zeros((0, dim), dtype=np.float64), np.zeros((0, 3), dtype=np.float64)
        )

    @staticmethod
    def concatenate(parts: list["DescriptorSet"]) -> "DescriptorSet":
        parts = [p for p in parts if len(p) > 0]
        if not parts:
            raise DataError("cannot concatenate empty descriptor sets")
        return DescriptorSet(
            np.concatenate([p.descriptors for p in parts]),
            np.concatenate([p.sites for p in parts]),
        )


def pyramid_levels(image: RasterImage, params: DenseSamplingParams):
    """Build the scale pyramid. Yields (level image, level index)."""
    work = image
    if params.upscale_factor > 1:
        work = resize_bilinear(
            image,
            image.width * params.upscale_factor,
            image.height * params.upscale_factor,
        )
    levels = [work]
    for _ in range(1, params.num_scales):
        prev = levels[-1]
        new_w = int(round(prev.width / params.scale_step))
        new_h = int(round(prev.height / params.scale_step))
        if new_w < 1 or new_h < 1:
            break
        levels.append(resize_bilinear(gaussian_blur(prev, _PYRAMID_SIGMA), new_w, new_h))
    return levels


def level_anchors(level_w: int, level_h: int, window: int, stride: int):
    """Top-left anchors of all windows fully inside a level, row-major.

    Returns (ax, ay) int64 arrays of equal length (possibly empty).
    """
    if level_w < window or level_h < window:
        z = np.zeros(0, dtype=np.int64)
        return z, z
    xs = np.arange(0, level_w - window + 1, stride, dtype=np.int64)
    ys = np.arange(0, level_h - window + 1, stride, dtype=np.int64)
    ay, ax = np.meshgrid(ys, xs, indexing="ij")
    return ax.ravel(), ay.ravel()


def map_sites_to_source(
    cx: np.ndarray,
    cy: np.ndarray,
    level_w: int,
    level_h: int,
    src_w: int,
    src_h: int,
    nominal_scale: float,
) -> np.ndarray:
    """Map level-frame window centres into source-image coordinates."""
    x = (cx + 0.5) * (src_w / level_w) - 0.5
    y = (cy + 0.5) * (src_h / level_h) - 0.5
    x = np.clip(x, 0.0, src_w - 1.0)
    y = np.clip(y, 0.0, src_h - 1.0)
    scale = np.full_like(x, nominal_scale, dtype=np.float64)
    return np.stack([x, y, scale], axis=1)
