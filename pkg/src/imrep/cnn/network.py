"""Network state, initialisation, and the forward/backward engine."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from imrep.cnn import layers as L
from imrep.cnn.arch import ArchitectureSpec, shape_pipeline
from imrep.errors import DataError
from imrep.fisher import FeatureVector

INIT_VARIANCE = 1e-2  # zero-mean Gaussian weight init


@dataclass
class NetworkState:
    """Learnable parameters plus optimiser state.

    ``params`` and ``momentum`` are keyed "<layer>.w" / "<layer>.b". In
    eval mode dropout sampling is disabled (activations are scaled by the
    keep probability instead).
    """

    params: dict
    momentum: dict
    mode: str = "train"
    lr_drops: int = 0
    plateau: int = 0

    def set_mode(self, mode: str):
        if mode not in ("train", "eval"):
            raise DataError(f"unknown mode {mode!r}")
        self.mode = mode

    def clone(self) -> "NetworkState":
        return NetworkState(
            params={k: v.copy() for k, v in self.params.items()},
            momentum={k: v.copy() for k, v in self.momentum.items()},
            mode=self.mode,
            lr_drops=self.lr_drops,
            plateau=self.plateau,
        )


def init_network(
    spec: ArchitectureSpec, seed: int, dtype=np.float32
) -> NetworkState:
    """Weights ~ N(0, 1e-2), biases zero, deterministic under the seed."""
    rng = np.random.default_rng(seed)
    std = np.sqrt(INIT_VARIANCE)
    shapes = shape_pipeline(spec)
    params = {}
    for i, layer in enumerate(spec.layers):
        inp = shapes[i]
        if layer.kind == "conv":
            shape = (layer.filters, inp.channels, layer.kernel, layer.kernel)
        elif layer.kind == "fully_connected":
            shape = (layer.out_dim, inp.flat)
        else:
            continue
        params[f"{layer.name}.w"] = (std * rng.standard_normal(shape)).astype(dtype)
        params[f"{layer.name}.b"] = np.zeros(shape[0], dtype=dtype)
    momentum = {k: np.zeros_like(v) for k, v in params.items()}
    return NetworkState(params=params, momentum=momentum)


def reinit_layer(state: NetworkState, name: str, out_dim: int, seed: int):
    """Replace one weight layer (used when fine-tuning swaps the last layer)."""
    w = state.params[f"{name}.w"]
    rng = np.random.default_rng(seed)
    std = np.sqrt(INIT_VARIANCE)
    neww = (std * rng.standard_normal((out_dim, w.shape[1]))).astype(w.dtype)
    state.params[f"{name}.w"] = neww
    state.params[f"{name}.b"] = np.zeros(out_dim, dtype=w.dtype)
    state.momentum[f"{name}.w"] = np.zeros_like(neww)
    state.momentum[f"{name}.b"] = np.zeros(out_dim, dtype=w.dtype)


def _layer_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([max(0, int(seed)), index])


def run_forward(state: NetworkState, spec: ArchitectureSpec, x: np.ndarray, seed: int = 0):
    """Run every layer, returning (activations, caches).

    ``activations[i]`` is the output of layer i; caches hold what backward
    needs. Dropout masks are drawn from a generator keyed (seed, layer
    index), so a forward pass is deterministic under (state, batch, seed).
    """
    train = state.mode == "train"
    a = x
    acts = []
    caches = []
    for i, layer in enumerate(spec.layers):
        if layer.kind == "conv":
            w = state.params[f"{layer.name}.w"]
            b = state.params[f"{layer.name}.b"]
            if a.shape[1] != w.shape[1]:
                raise DataError(
                    f"layer {layer.name}: input channels {a.shape[1]} != {w.shape[1]}"
                )
            out = L.conv_forward(a, w, b, layer.stride, layer.pad)
            caches.append(a)
        elif layer.kind == "relu":
            out = L.relu_forward(a)
            caches.append(a)
        elif layer.kind == "lrn":
            out, cache = L.lrn_forward(
                a, layer.lrn_radius, layer.lrn_alpha, layer.lrn_beta, layer.lrn_bias
            )
            caches.append(cache)
        elif layer.kind == "maxpool":
            out, idx = L.maxpool_forward(a, layer.window, layer.stride)
            caches.append((a.shape, idx))
        elif layer.kind == "fully_connected":
            w = state.params[f"{layer.name}.w"]
            b = state.params[f"{layer.name}.b"]
            out = L.fc_forward(a, w, b)
            caches.append(a)
        elif layer.kind == "dropout":
            out, mask = L.dropout_forward(a, layer.rate, train, _layer_rng(seed, i))
            caches.append(mask)
        else:  # softmax
            out = L.softmax_forward(a)
            caches.append(out)
        acts.append(out)
        a = out
    return acts, caches


def forward(state: NetworkState, spec: ArchitectureSpec, batch: np.ndarray, seed: int = 0):
    """Per-layer activations for a batch (spec order)."""
    acts, _ = run_forward(state, spec, batch, seed)
    return acts


def run_backward(
    state: NetworkState,
    spec: ArchitectureSpec,
    caches,
    dout: np.ndarray,
    upto: int | None = None,
):
    """Backpropagate ``dout`` (gradient w.r.t. layer ``upto``'s output,
    default the last layer) down to the input. Returns (grads, dx)."""
    grads = {}
    start = len(spec.layers) - 1 if upto is None else upto
    d = dout
    for i in range(start, -1, -1):
        layer = spec.layers[i]
        if layer.kind == "conv":
            w = state.params[f"{layer.name}.w"]
            d, dw, db = L.conv_backward(caches[i], w, d, layer.stride, layer.pad)
            grads[f"{layer.name}.w"] = dw
            grads[f"{layer.name}.b"] = db
        elif layer.kind == "relu":
            d = L.relu_backward(caches[i], d)
        elif layer.kind == "lrn":
            d = L.lrn_backward(
                caches[i], d, layer.lrn_radius, layer.lrn_alpha, layer.lrn_beta
            )
        elif layer.kind == "maxpool":
            shape, idx = caches[i]
            d = L.maxpool_backward(d, idx, shape[2], shape[3], layer.window, layer.stride)
        elif layer.kind == "fully_connected":
            w = state.params[f"{layer.name}.w"]
            d, dw, db = L.fc_backward(caches[i], w, d)
            grads[f"{layer.name}.w"] = dw
            grads[f"{layer.name}.b"] = db
        elif layer.kind == "dropout":
            d = L.dropout_backward(d, layer.rate, state.mode == "train", caches[i])
        else:  # softmax
            d = L.softmax_backward(caches[i], d)
    return grads, d


def scores_index(spec: ArchitectureSpec) -> int:
    """Index of the last pre-softmax activation (the class scores)."""
    for i in reversed(range(len(spec.layers))):
        if spec.layers[i].kind == "fully_connected":
            return i
    raise DataError("architecture has no fully-connected layer")


def _relu_after(spec: ArchitectureSpec, name: str) -> int:
    for i, layer in enumerate(spec.layers):
        if layer.name == name:
            for j in range(i + 1, len(spec.layers)):
                if spec.layers[j].kind == "relu":
                    return j
            raise DataError(f"no relu follows {name}")
    raise DataError(f"architecture has no layer named {name}")


def extract_features(
    state: NetworkState,
    spec: ArchitectureSpec,
    batch: np.ndarray,
    l2: bool = True,
) -> list[FeatureVector]:
    """Penultimate-layer descriptors: full7 activations after ReLU,
    l2-normalised per sample (zero activations stay zero)."""
    if state.mode != "eval":
        raise DataError("extract_features requires an eval-mode state")
    acts, _ = run_forward(state, spec, batch, seed=0)
    feats = acts[_relu_after(spec, "full7")].reshape(batch.shape[0], -1)
    feats = feats.astype(np.float64)
    if l2:
        norms = np.linalg.norm(feats, axis=1, keepdims=True)
        feats = feats / np.where(norms > 0.0, norms, 1.0)
    return [
        FeatureVector(row, l2_normalised=l2, provenance=f"cnn:{spec.name}")
        for row in feats
    ]
