"""The CNN-F / CNN-M / CNN-S architecture family and scaled micro variants.

Each base net has five convolutional blocks and three fully-connected
layers. ReLU follows every weight layer except the last, which feeds a
softmax; full6/full7 carry dropout. "xN pool" means an N x N max-pooling
window with stride N, applied after the block's (optional) LRN.
"""

from __future__ import annotations

from dataclasses import dataclass

from imrep.cnn.layers import LayerSpec, TensorShape, output_shape
from imrep.errors import DataError

ARCHITECTURE_NAMES = (
    "CNN-F",
    "CNN-M",
    "CNN-S",
    "CNN-M-2048",
    "CNN-M-1024",
    "CNN-M-128",
)


@dataclass(frozen=True)
class ArchitectureSpec:
    name: str
    layers: tuple
    num_classes: int
    input_size: int = 224
    in_channels: int = 3

    def weight_layers(self):
        return [l for l in self.layers if l.kind in ("conv", "fully_connected")]


def _conv_block(name, filters, kernel, stride, pad, lrn, pool):
    layers = [
        LayerSpec(
            kind="conv", name=name, filters=filters, kernel=kernel,
            stride=stride, pad=pad,
        ),
        LayerSpec(kind="relu"),
    ]
    if lrn:
        layers.append(LayerSpec(kind="lrn"))
    if pool:
        layers.append(LayerSpec(kind="maxpool", window=pool, stride=pool))
    return layers


def _fc_tail(full6, full7, num_classes, dropout_rate):
    return [
        LayerSpec(kind="fully_connected", name="full6", out_dim=full6),
        LayerSpec(kind="relu"),
        LayerSpec(kind="dropout", rate=dropout_rate),
        LayerSpec(kind="fully_connected", name="full7", out_dim=full7),
        LayerSpec(kind="relu"),
        LayerSpec(kind="dropout", rate=dropout_rate),
        LayerSpec(kind="fully_connected", name="full8", out_dim=num_classes),
        LayerSpec(kind="softmax"),
    ]


# (filters, kernel, stride, pad, lrn, pool) per conv block
_CONV_TABLES = {
    "CNN-F": [
        (64, 11, 4, 0, True, 2),
        (256, 5, 1, 2, True, 2),
        (256, 3, 1, 1, False, 0),
        (256, 3, 1, 1, False, 0),
        (256, 3, 1, 1, False, 2),
    ],
    "CNN-M": [
        (96, 7, 2, 0, True, 2),
        (256, 5, 2, 1, True, 2),
        (512, 3, 1, 1, False, 0),
        (512, 3, 1, 1, False, 0),
        (512, 3, 1, 1, False, 2),
    ],
    "CNN-S": [
        (96, 7, 2, 0, True, 3),
        (256, 5, 1, 1, False, 2),
        (512, 3, 1, 1, False, 0),
        (512, 3, 1, 1, False, 0),
        (512, 3, 1, 1, False, 3),
    ],
}

_FULL7_VARIANTS = {"CNN-M-2048": 2048, "CNN-M-1024": 1024, "CNN-M-128": 128}


def build_architecture(
    name: str,
    num_classes: int = 1000,
    dropout_rate: float = 0.5,
) -> ArchitectureSpec:
    """Construct a named architecture at full scale (224 x 224 input)."""
    if name not in ARCHITECTURE_NAMES:
        raise DataError(f"unknown architecture {name!r}")
    base = name if name in _CONV_TABLES else "CNN-M"
    full7 = _FULL7_VARIANTS.get(name, 4096)

    layers = []
    for i, row in enumerate(_CONV_TABLES[base], start=1):
        layers.extend(_conv_block(f"conv{i}", *row))
    layers.extend(_fc_tail(4096, full7, num_classes, dropout_rate))

    spec = ArchitectureSpec(
        name=name, layers=tuple(layers), num_classes=num_classes
    )
    shape_pipeline(spec)  # composes or raises
    return spec


def scaled_architecture(
    name: str,
    width_divisor: int = 8,
    num_classes: int = 10,
    input_size: int = 64,
    dropout_rate: float = 0.5,
) -> ArchitectureSpec:
    """A micro variant: same layer kinds and geometry, channel widths and
    fully-connected dims divided by ``width_divisor``, smaller input."""
    if name not in ARCHITECTURE_NAMES:
        raise DataError(f"unknown architecture {name!r}")
    base = name if name in _CONV_TABLES else "CNN-M"
    full7 = _FULL7_VARIANTS.get(name, 4096)

    layers = []
    for i, row in enumerate(_CONV_TABLES[base], start=1):
        filters, kernel, stride, pad, lrn, pool = row
        layers.extend(
            _conv_block(
                f"conv{i}", max(1, filters // width_divisor), kernel, stride,
                pad, lrn, pool,
            )
        )
    layers.extend(
        _fc_tail(
            max(1, 4096 // width_divisor),
            max(1, full7 // width_divisor),
            num_classes,
            dropout_rate,
        )
    )
    spec = ArchitectureSpec(
        name=f"{name}/{width_divisor}",
        layers=tuple(layers),
        num_classes=num_classes,
        input_size=input_size,
    )
    shape_pipeline(spec)
    return spec


def shape_pipeline(spec: ArchitectureSpec):
    """Compose output_shape through every layer; returns the shape list."""
    shape = TensorShape(spec.input_size, spec.input_size, spec.in_channels)
    shapes = [shape]
    for layer in spec.layers:
        shape = output_shape(layer, shape)
        shapes.append(shape)
    return shapes


def full7_dim(spec: ArchitectureSpec) -> int:
    for layer in spec.layers:
        if layer.name == "full7":
            return layer.out_dim
    raise DataError(f"architecture {spec.name} has no full7 layer")
