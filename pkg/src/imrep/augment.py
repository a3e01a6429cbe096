"""Crop/flip sample generation, training-time random augmentation, and fusion.

Test-time sampling follows three strategies: "none" (centre crop only),
"flip" (centre crop plus its mirror), and "crop_flip" (four corners plus
centre of a min-side-256 resize, each mirrored: 10 samples). Sample order
is fixed as (centre, TL, TR, BL, BR) x (original, mirrored), interleaved,
so stacked features are comparable across runs.

For CNN consumption the samples are fixed-size crops of the resized image;
for descriptor pipelines the same crop geometry is mapped back to the
original image resolution and no resizing happens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from imrep.errors import DataError
from imrep.fisher import FeatureVector, l2_normalise
from imrep.image import RasterImage, crop, mirror_horizontal, resize_min_side

KINDS = ("none", "flip", "crop_flip")
FUSION_MODES = ("samples", "sum", "max", "stack")

# crop_flip resizes the smallest side to target * 256/224 before cropping
CROP_FRAME_RATIO = 256.0 / 224.0

_SAMPLE_COUNTS = {"none": 1, "flip": 2, "crop_flip": 10}


@dataclass(frozen=True)
class AugmentStrategy:
    kind: str = "none"
    fusion_train: str = "samples"
    fusion_test: str = "samples"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown augmentation kind {self.kind!r}")
        if self.fusion_train != "samples":
            raise DataError("training fusion supports only 'samples'")
        if self.fusion_test not in FUSION_MODES:
            raise DataError(f"unknown fusion mode {self.fusion_test!r}")

    @property
    def sample_count(self) -> int:
        return _SAMPLE_COUNTS[self.kind]


def crop_frame_side(target: int) -> int:
    """Smallest-side length of the resized frame used for corner cropping."""
    return int(round(target * CROP_FRAME_RATIO))


def _positions(w: int, h: int, side: int):
    """Crop origins in fixed order: centre, TL, TR, BL, BR."""
    return [
        ((w - side) // 2, (h - side) // 2),
        (0, 0),
        (w - side, 0),
        (0, h - side),
        (w - side, h - side),
    ]


def _with_mirrors(crops):
    out = []
    for c in crops:
        out.append(c)
        out.append(mirror_horizontal(c))
    return out


def generate_samples(
    image: RasterImage,
    strategy: AugmentStrategy,
    target: int = 224,
    for_cnn: bool = True,
) -> list[RasterImage]:
    """Deterministic test-time samples for one image.

    With ``for_cnn`` the image is resized (smallest side to ``target``, or
    to the crop frame for crop_flip) and fixed ``target`` x ``target``
    crops are taken. Otherwise the same crop geometry is scaled onto the
    original resolution: square crops of side round(target * min_side /
    frame_side) are cut without any resampling.
    """
    if target < 8:
        raise DataError("augmentation target too small")
    min_side = min(image.width, image.height)
    frame = crop_frame_side(target) if strategy.kind == "crop_flip" else target

    if for_cnn:
        resized = resize_min_side(image, frame)
        side = target
        w, h = resized.width, resized.height
    else:
        resized = image
        side = int(round(target * min_side / frame))
        if side < 8 or side > min_side:
            raise DataError(
                f"degenerate image: {image.width}x{image.height} cannot host "
                f"{side}px crops"
            )
        w, h = image.width, image.height

    positions = _positions(w, h, side)
    centre = crop(resized, positions[0][0], positions[0][1], side, side)

    if strategy.kind == "none":
        return [centre]
    if strategy.kind == "flip":
        return _with_mirrors([centre])
    crops = [crop(resized, x, y, side, side) for x, y in positions]
    return _with_mirrors(crops)


def random_train_crop(image: RasterImage, target: int, seed: int) -> RasterImage:
    """A uniformly random target-square crop with a 50% mirror.

    The caller resizes the smallest side to the training frame first (see
    prepare_train_frame). The offset pair is drawn before the mirror coin,
    so crop geometry is reproducible independently of the flip.
    """
    if image.width < target or image.height < target:
        raise DataError(
            f"image {image.width}x{image.height} smaller than crop {target}"
        )
    rng = np.random.default_rng(seed)
    ox = int(rng.integers(0, image.width - target + 1))
    oy = int(rng.integers(0, image.height - target + 1))
    out = crop(image, ox, oy, target, target)
    if rng.random() < 0.5:
        out = mirror_horizontal(out)
    return out


def prepare_train_frame(image: RasterImage, target: int) -> RasterImage:
    """Resize so random ``target`` crops sample the whole training image."""
    return resize_min_side(image, crop_frame_side(target))


def fit_rgb_pca(images, seed: int = 0, per_image: int = 1000):
    """Principal components of RGB pixel values over a seeded subsample.

    Returns (basis, eigenvalues): basis columns are unit eigenvectors in
    decreasing eigenvalue order.
    """
    rng = np.random.default_rng(seed)
    chunks = []
    for img in images:
        if img.channels != 3:
            raise DataError("colour PCA needs RGB images")
        flat = img.data.reshape(-1, 3)
        take = min(per_image, flat.shape[0])
        idx = rng.choice(flat.shape[0], size=take, replace=False)
        chunks.append(flat[idx])
    pixels = np.concatenate(chunks)
    pixels = pixels - pixels.mean(axis=0)
    cov = (pixels.T @ pixels) / pixels.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    return eigvecs[:, order], np.maximum(eigvals[order], 0.0)


def colour_jitter(
    image: RasterImage,
    basis: np.ndarray,
    eigenvalues: np.ndarray,
    strength: float,
    seed: int,
) -> RasterImage:
    """Add a random combination of RGB principal components to every pixel.

    Component i receives a coefficient drawn from N(0, strength^2 *
    eigenvalue_i); the resulting constant colour offset is added to the
    whole image and values are clamped back into [0, 1].
    """
    if image.channels != 3:
        raise DataError("colour jitter needs an RGB image")
    basis = np.asarray(basis, dtype=np.float64).reshape(3, 3)
    eigenvalues = np.asarray(eigenvalues, dtype=np.float64).ravel()
    z = np.random.default_rng(seed).standard_normal(3)
    coeff = strength * np.sqrt(np.maximum(eigenvalues, 0.0)) * z
    offset = basis @ coeff
    return RasterImage(np.clip(image.data + offset[None, None, :], 0.0, 1.0))


def fuse(features: list[FeatureVector], mode: str) -> list[FeatureVector]:
    """Fuse per-sample features: pass-through, sum/max pooling, or stacking.

    Pooled and stacked outputs are l2-normalised; "samples" returns the
    inputs unchanged (one feature per augmented sample).
    """
    if mode not in FUSION_MODES:
        raise DataError(f"unknown fusion mode {mode!r}")
    if not features:
        raise DataError("cannot fuse an empty feature list")
    dims = {f.dim for f in features}
    if len(dims) != 1:
        raise DataError(f"mixed feature dims {sorted(dims)}")
    if mode == "samples":
        return list(features)

    stackv = np.stack([f.values for f in features])
    if mode == "sum":
        fused = stackv.sum(axis=0)
    elif mode == "max":
        fused = stackv.max(axis=0)
    else:
        fused = stackv.ravel()
    return [
        FeatureVector(
            l2_normalise(fused.astype(np.float64)),
            l2_normalised=True,
            provenance=f"fused-{mode}",
        )
    ]
