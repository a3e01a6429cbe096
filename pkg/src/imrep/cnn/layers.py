"""CNN layer primitives: specs, shape arithmetic, forward/backward passes.

Activations are (N, C, H, W). Layers are described by LayerSpec records;
the weight-bearing kinds (conv, fully_connected) carry a name used to key
the parameter dict. All backward passes are exact subgradients and are
finite-difference checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from imrep import _kernels
from imrep.errors import DataError

LAYER_KINDS = (
    "conv",
    "relu",
    "lrn",
    "maxpool",
    "fully_connected",
    "dropout",
    "softmax",
)

# cross-channel normalisation defaults (window = 2*radius + 1 channels)
LRN_RADIUS = 5
LRN_ALPHA = 1e-4
LRN_BETA = 0.75
LRN_BIAS = 2.0


@dataclass(frozen=True)
class TensorShape:
    height: int
    width: int
    channels: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.channels < 1:
            raise DataError(f"invalid tensor shape {self}")

    @property
    def flat(self) -> int:
        return self.height * self.width * self.channels


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    name: str = ""
    filters: int = 0  # conv
    kernel: int = 0  # conv
    stride: int = 1  # conv, maxpool
    pad: int = 0  # conv
    window: int = 0  # maxpool
    out_dim: int = 0  # fully_connected
    rate: float = 0.0  # dropout
    lrn_radius: int = LRN_RADIUS
    lrn_alpha: float = LRN_ALPHA
    lrn_beta: float = LRN_BETA
    lrn_bias: float = LRN_BIAS

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise DataError(f"unknown layer kind {self.kind!r}")
        if self.stride < 1 or self.pad < 0:
            raise DataError("stride must be >= 1 and pad >= 0")
        if self.kind == "conv" and (self.filters < 1 or self.kernel < 1):
            raise DataError("conv needs filters >= 1 and kernel >= 1")
        if self.kind == "maxpool" and self.window < 1:
            raise DataError("maxpool needs window >= 1")
        if self.kind == "fully_connected" and self.out_dim < 1:
            raise DataError("fully_connected needs out_dim >= 1")
        if self.kind == "dropout" and not 0.0 <= self.rate < 1.0:
            raise DataError("dropout rate must be in [0, 1)")


def output_shape(layer: LayerSpec, inp: TensorShape) -> TensorShape:
    """Shape arithmetic; raises when a kernel does not fit the padded input."""
    if layer.kind == "conv":
        h = (inp.height + 2 * layer.pad - layer.kernel) // layer.stride + 1
        w = (inp.width + 2 * layer.pad - layer.kernel) // layer.stride + 1
        if h < 1 or w < 1:
            raise DataError(
                f"kernel exceeds input: {layer.kernel} on {inp.height}x{inp.width}"
            )
        return TensorShape(h, w, layer.filters)
    if layer.kind == "maxpool":
        h = (inp.height - layer.window) // layer.stride + 1
        w = (inp.width - layer.window) // layer.stride + 1
        if h < 1 or w < 1:
            raise DataError(
                f"kernel exceeds input: {layer.window} on {inp.height}x{inp.width}"
            )
        return TensorShape(h, w, inp.channels)
    if layer.kind == "fully_connected":
        return TensorShape(1, 1, layer.out_dim)
    return inp


# ---------------------------------------------------------------------------
# forward / backward primitives


def conv_forward(x, w, b, stride: int, pad: int):
    return _kernels.conv2d_forward(x, w, b, stride, pad)


def conv_backward(x, w, dy, stride: int, pad: int):
    return _kernels.conv2d_backward(x, w, dy, stride, pad)


def relu_forward(x):
    return np.maximum(x, 0)


def relu_backward(x, dy):
    return np.where(x > 0, dy, 0)


def _channel_window_sum(v: np.ndarray, radius: int) -> np.ndarray:
    n, c = v.shape[0], v.shape[1]
    cs = np.concatenate(
        [np.zeros((n, 1) + v.shape[2:], dtype=v.dtype), np.cumsum(v, axis=1)], axis=1
    )
    hi = np.minimum(np.arange(c) + radius, c - 1) + 1
    lo = np.maximum(np.arange(c) - radius, 0)
    return cs[:, hi] - cs[:, lo]


def lrn_forward(x, radius: int, alpha: float, beta: float, bias: float):
    """Cross-channel response normalisation: y = x * (bias + alpha*S)^-beta
    with S the windowed sum of squares over [c-radius, c+radius]."""
    s = bias + alpha * _channel_window_sum(x * x, radius)
    scale = s ** (-beta)
    return x * scale, (x, s, scale)


def lrn_backward(cache, dy, radius: int, alpha: float, beta: float):
    x, s, scale = cache
    inner = _channel_window_sum(dy * x * s ** (-beta - 1.0), radius)
    return dy * scale - 2.0 * alpha * beta * x * inner


def maxpool_forward(x, window: int, stride: int):
    return _kernels.maxpool_forward(x, window, stride)


def maxpool_backward(dy, idx, in_h: int, in_w: int, window: int, stride: int):
    return _kernels.maxpool_backward(dy, idx, in_h, in_w, window, stride)


def fc_forward(x, w, b):
    x2 = x.reshape(x.shape[0], -1)
    if x2.shape[1] != w.shape[1]:
        raise DataError(f"fc input {x2.shape[1]} != weight width {w.shape[1]}")
    return x2 @ w.T + b


def fc_backward(x, w, dy):
    x2 = x.reshape(x.shape[0], -1)
    dw = dy.T @ x2
    db = dy.sum(axis=0)
    dx = (dy @ w).reshape(x.shape)
    return dx, dw, db


def dropout_forward(x, rate: float, train: bool, rng: np.random.Generator):
    """Classic dropout: units are zeroed at train time and the expectation
    is matched at eval time by scaling with (1 - rate)."""
    if not train:
        return x * np.asarray(1.0 - rate, dtype=x.dtype), None
    if rate == 0.0:
        return x, None
    mask = (rng.random(x.shape) >= rate).astype(x.dtype)
    return x * mask, mask


def dropout_backward(dy, rate: float, train: bool, mask):
    if not train:
        return dy * np.asarray(1.0 - rate, dtype=dy.dtype)
    if mask is None:
        return dy
    return dy * mask


def softmax_forward(x):
    z = x - np.max(x, axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_backward(y, dy):
    dot = np.sum(dy * y, axis=1, keepdims=True)
    return y * (dy - dot)
