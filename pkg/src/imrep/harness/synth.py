"""Seeded synthetic datasets for desk-scale end-to-end runs.

Two generators: a two-class oriented-grating texture set (separable by
local gradient statistics) and a ten-class geometric shape set with pose,
scale, colour and background jitter (easy for a small trained CNN, harder
for handcrafted descriptors).
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from imrep.errors import DataError
from imrep.harness.manifest import load_manifest, save_manifest
from imrep.image import RasterImage, save_image

TEXTURE_CLASSES = ("grate_steep", "grate_flat")

SHAPE_CLASSES = (
    "disk",
    "ring",
    "square",
    "frame",
    "diamond",
    "triangle",
    "cross",
    "saltire",
    "bars_h",
    "bars_v",
)


def _texture(rng: np.random.Generator, label: int, size: int) -> np.ndarray:
    if label == 0:
        theta = rng.uniform(-0.35, 0.35)  # stripe normal near horizontal
    else:
        theta = rng.uniform(math.pi / 2 - 0.35, math.pi / 2 + 0.35)
    freq = rng.uniform(5.0, 11.0)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    amp = rng.uniform(0.25, 0.4)
    base = rng.uniform(0.35, 0.55)

    ys, xs = np.mgrid[0:size, 0:size]
    wave = np.sin(
        2.0 * math.pi * freq * (xs * math.cos(theta) + ys * math.sin(theta)) / size
        + phase
    )
    gray = base + amp * wave
    tint = rng.uniform(-0.05, 0.05, size=3)
    img = gray[:, :, None] + tint[None, None, :]
    img += rng.normal(0.0, 0.04, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def _shape_mask(label: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Anti-aliased 0..1 mask, rendered on a 2x supersampled grid."""
    ss = 2
    n = size * ss
    cx = (0.5 + rng.uniform(-0.08, 0.08)) * n
    cy = (0.5 + rng.uniform(-0.08, 0.08)) * n
    radius = rng.uniform(0.26, 0.38) * n
    angle = rng.uniform(-0.45, 0.45)

    ys, xs = np.mgrid[0:n, 0:n]
    u = (xs - cx) / radius
    v = (ys - cy) / radius
    ca, sa = math.cos(angle), math.sin(angle)
    u, v = ca * u + sa * v, -sa * u + ca * v

    rho = np.hypot(u, v)
    box = np.maximum(np.abs(u), np.abs(v))
    name = SHAPE_CLASSES[label]
    if name == "disk":
        mask = rho <= 1.0
    elif name == "ring":
        mask = (rho <= 1.0) & (rho >= 0.55)
    elif name == "square":
        mask = box <= 0.85
    elif name == "frame":
        mask = (box <= 0.85) & (box >= 0.5)
    elif name == "diamond":
        mask = np.abs(u) + np.abs(v) <= 1.1
    elif name == "triangle":
        mask = (v <= 0.75) & (v >= -1.05 + 2.1 * np.abs(u))
    elif name == "cross":
        mask = ((np.abs(u) <= 0.32) & (np.abs(v) <= 1.0)) | (
            (np.abs(v) <= 0.32) & (np.abs(u) <= 1.0)
        )
    elif name == "saltire":
        c2, s2 = math.cos(math.pi / 4), math.sin(math.pi / 4)
        u2, v2 = c2 * u + s2 * v, -s2 * u + c2 * v
        mask = ((np.abs(u2) <= 0.32) & (np.abs(v2) <= 1.0)) | (
            (np.abs(v2) <= 0.32) & (np.abs(u2) <= 1.0)
        )
    elif name == "bars_h":
        mask = (np.abs(u) <= 1.0) & (
            (np.abs(v - 0.55) <= 0.22) | (np.abs(v + 0.55) <= 0.22)
        )
    else:  # bars_v
        mask = (np.abs(v) <= 1.0) & (
            (np.abs(u - 0.55) <= 0.22) | (np.abs(u + 0.55) <= 0.22)
        )
    mask = mask.astype(np.float64)
    return mask.reshape(size, ss, size, ss).mean(axis=(1, 3))


def _shape_image(rng: np.random.Generator, label: int, size: int) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size]
    background = np.full((size, size), 0.3)
    for _ in range(3):
        fx, fy = rng.uniform(0.5, 2.5, size=2)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        background += 0.06 * np.sin(
            2.0 * math.pi * (fx * xs + fy * ys) / size + phase
        )
    mask = _shape_mask(label, size, rng)
    fg = rng.uniform(0.65, 0.9)
    tint = rng.uniform(-0.1, 0.1, size=3)
    img = background[:, :, None] * (1.0 - mask[:, :, None])
    img += mask[:, :, None] * (fg + tint[None, None, :])
    img += rng.normal(0.0, 0.035, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def _generate(
    out_dir,
    classes,
    render,
    n_train: int,
    n_val: int,
    n_test: int,
    seed: int,
    size: int,
):
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    counter = 0
    for split, count in (("train", n_train), ("val", n_val), ("test", n_test)):
        for i in range(count):
            label = i % len(classes)
            img = render(rng, label, size)
            name = f"images/{split}_{counter:05d}_{classes[label]}.png"
            save_image(RasterImage(img), out_dir / name)
            entries.append((name, split, {classes[label]}, set()))
            counter += 1
    manifest_path = out_dir / "manifest.tsv"
    save_manifest(manifest_path, entries, classes=classes)
    return manifest_path


def synth_textures(
    out_dir, n_train: int, n_val: int, n_test: int, seed: int, size: int = 80
):
    """Two-class oriented-grating dataset; returns the manifest path."""
    if min(n_train, n_test) < 2:
        raise DataError("need at least one image per class in train and test")
    return _generate(
        out_dir, TEXTURE_CLASSES, _texture, n_train, n_val, n_test, seed, size
    )


def synth_shapes(
    out_dir, n_train: int, n_val: int, n_test: int, seed: int, size: int = 80
):
    """Ten-class geometric shape dataset; returns the manifest path."""
    if min(n_train, n_test) < len(SHAPE_CLASSES):
        raise DataError("need at least one image per class in train and test")
    return _generate(
        out_dir, SHAPE_CLASSES, _shape_image, n_train, n_val, n_test, seed, size
    )


def load_split(manifest_path, split: str):
    """(images, label indices, entries) for one split of a manifest."""
    from imrep.image import load_image

    manifest = load_manifest(manifest_path)
    base = Path(manifest_path).parent
    entries = manifest.split(split)
    images = [load_image(base / e.path) for e in entries]
    labels = np.array(
        [manifest.classes.index(sorted(e.labels)[0]) for e in entries],
        dtype=np.int64,
    )
    return images, labels, entries
