"""Raster images and the pixel-level operations shared by the pipelines.

Images are stored as (height, width, channels) float64 arrays with values
in [0, 1]. Lab images are rescaled into the same range (see rgb_to_lab) so
a single invariant covers every colour space used downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from imrep.errors import DataError

# Rec.601 luminance weights.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# D65 reference white in the XYZ space used by the Lab conversion.
_D65 = (0.95047, 1.0, 1.08883)

# Offsets/scales mapping CIE Lab onto [0, 1] (a*, b* stay inside +-110 for
# sRGB inputs).
_LAB_SCALE = (100.0, 220.0, 220.0)
_LAB_OFFSET = (0.0, 110.0, 110.0)


@dataclass(frozen=True)
class RasterImage:
    """A W x H raster with 1 (grayscale) or 3 (RGB or scaled Lab) channels."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise DataError(f"image must be HxWx1 or HxWx3, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError("image must be at least 1x1")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def to_grayscale(image: RasterImage) -> RasterImage:
    """Collapse RGB to Rec.601 luminance; grayscale input passes through."""
    if image.channels == 1:
        return image
    w = np.asarray(LUMA_WEIGHTS)
    return RasterImage(image.data @ w)


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def rgb_to_lab(image: RasterImage) -> RasterImage:
    """Convert sRGB to CIE Lab (D65 white point), rescaled into [0, 1].

    Channel 0 is L*/100; channels 1 and 2 are (a* + 110)/220 and
    (b* + 110)/220. The rescaling keeps all raster data in one value range
    and washes out in the descriptor statistics (which are later PCA
    decorrelated anyway).
    """
    if image.channels != 3:
        raise DataError("rgb_to_lab expects a 3-channel image")
    rgb = _srgb_to_linear(image.data)
    m = np.array(
        [
            [0.4124564, 0.3575761, 0.1804375],
            [0.2126729, 0.7151522, 0.0721750],
            [0.0193339, 0.1191920, 0.9503041],
        ]
    )
    xyz = rgb @ m.T
    xyz = xyz / np.asarray(_D65)

    eps = 216.0 / 24389.0
    kappa = 24389.0 / 27.0
    f = np.where(xyz > eps, np.cbrt(xyz), (kappa * xyz + 16.0) / 116.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lab = np.stack(
        [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1
    )
    lab = (lab + np.asarray(_LAB_OFFSET)) / np.asarray(_LAB_SCALE)
    return RasterImage(np.clip(lab, 0.0, 1.0))


def resize_bilinear(image: RasterImage, new_w: int, new_h: int) -> RasterImage:
    """Bilinear resample using half-pixel-centre sampling, edges clamped."""
    if new_w < 1 or new_h < 1:
        raise DataError("resize target must be at least 1x1")
    src = image.data
    h, w = src.shape[:2]
    if (new_w, new_h) == (w, h):
        return image

    xs = (np.arange(new_w) + 0.5) * (w / new_w) - 0.5
    ys = (np.arange(new_h) + 0.5) * (h / new_h) - 0.5
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)

    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[None, :, None]
    fy = (ys - y0)[:, None, None]

    top = src[y0][:, x0] * (1.0 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1.0 - fx) + src[y1][:, x1] * fx
    return RasterImage(top * (1.0 - fy) + bot * fy)


def resize_min_side(image: RasterImage, side: int) -> RasterImage:
    """Rescale so the smallest dimension equals ``side``, keeping aspect."""
    if side < 1:
        raise DataError("target side must be positive")
    w, h = image.width, image.height
    if w <= h:
        new_w = side
        new_h = max(side, int(round(h * side / w)))
    else:
        new_h = side
        new_w = max(side, int(round(w * side / h)))
    return resize_bilinear(image, new_w, new_h)


def crop(image: RasterImage, x0: int, y0: int, cw: int, ch: int) -> RasterImage:
    if x0 < 0 or y0 < 0 or x0 + cw > image.width or y0 + ch > image.height:
        raise DataError(
            f"crop ({x0},{y0},{cw},{ch}) outside {image.width}x{image.height} image"
        )
    return RasterImage(image.data[y0 : y0 + ch, x0 : x0 + cw].copy())


def center_crop(image: RasterImage, cw: int, ch: int) -> RasterImage:
    x0 = (image.width - cw) // 2
    y0 = (image.height - ch) // 2
    return crop(image, x0, y0, cw, ch)


def mirror_horizontal(image: RasterImage) -> RasterImage:
    """Mirror about the vertical axis. An exact involution (pure indexing)."""
    return RasterImage(image.data[:, ::-1].copy())


def gaussian_blur(image: RasterImage, sigma: float) -> RasterImage:
    if sigma <= 0:
        return image
    out = ndimage.gaussian_filter(
        image.data, sigma=(sigma, sigma, 0.0), mode="nearest"
    )
    return RasterImage(out)


def load_image(path) -> RasterImage:
    """Read a PNG/JPEG file into an RGB or grayscale RasterImage."""
    from PIL import Image as PILImage

    try:
        with PILImage.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except FileNotFoundError:
        raise DataError(f"image file not found: {path}")
    except OSError as exc:
        raise DataError(f"cannot decode image {path}: {exc}")
    return RasterImage(arr)


def save_image(image: RasterImage, path) -> None:
    from PIL import Image as PILImage

    arr = np.clip(image.data, 0.0, 1.0)
    arr = np.round(arr * 255.0).astype(np.uint8)
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    PILImage.fromarray(arr).save(path)
