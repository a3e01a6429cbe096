"""Dense local descriptor extraction: multi-scale SIFT and colour statistics."""

from imrep.descriptors.grid import (
    DenseSamplingParams,
    DescriptorSet,
    level_anchors,
    pyramid_levels,
)
from imrep.descriptors.lcs import extract_lcs
from imrep.descriptors.sift import extract_dense_sift

__all__ = [
    "DenseSamplingParams",
    "DescriptorSet",
    "extract_dense_sift",
    "extract_lcs",
    "level_anchors",
    "pyramid_levels",
]
