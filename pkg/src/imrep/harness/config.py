"""Experiment configuration: line-oriented key = value with [section] headers.

Every random seed must be explicit in the file (no hidden seed defaults);
all other defaults are resolved at load time and echoed into the emitted
results row, so a row fully determines its experiment.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields
from pathlib import Path

from imrep.errors import DataError

REPRESENTATION_KINDS = ("fv", "cnn", "fv+cnn")


@dataclass(frozen=True)
class ExperimentConfig:
    # [experiment]
    name: str = "experiment"
    seed: int = 0
    threads: int = 1
    # [dataset]
    manifest: str = "manifest.tsv"
    cache_dir: str = ""
    # [representation]
    kind: str = "fv"
    # [descriptors]
    stride: int = 3
    num_scales: int = 7
    scale_step: float = math.sqrt(2.0)
    upscale_factor: int = 2
    base_patch: int = 24
    window: str = "flat"
    # [pca]
    pca_dim: int = 80
    pca_seed: int = 0
    pca_sample_cap: int = 256_000
    # [gmm]
    gmm_k: int = 256
    gmm_seed: int = 0
    gmm_max_iters: int = 100
    gmm_tol: float = 1e-5
    gmm_samples_per_image: int = 300
    # [fv]
    fv_normalisation: str = "intra_norm_single_sqrt"
    fv_spatial: str = "extended"
    fv_colour: str = "none"  # none | only | stack
    # [cnn]
    cnn_model: str = ""
    # [augment]
    aug_kind: str = "none"
    fusion_train: str = "samples"
    fusion_test: str = "samples"
    aug_target: int = 224
    # [svm]
    svm_c_grid: tuple = (0.01, 0.1, 1.0, 10.0)
    svm_seed: int = 0
    svm_metric: str = "map"
    svm_val_fraction: float = 0.25
    svm_retrain_trainval: bool = True
    svm_exclude_difficult: bool = False
    # [eval]
    eval_metrics: tuple = ("map", "accuracy", "mean_class_accuracy")
    eval_top_k: int = 5

    def __post_init__(self):
        if self.kind not in REPRESENTATION_KINDS:
            raise DataError(f"unknown representation kind {self.kind!r}")
        if self.fv_colour not in ("none", "only", "stack"):
            raise DataError(f"unknown colour mode {self.fv_colour!r}")

    def resolved(self) -> dict:
        """Every field in declaration order (the config echo)."""
        return {f.name: getattr(self, f.name) for f in fields(self)}


_SECTIONS = {
    "experiment": {"name": str, "seed": int, "threads": int},
    "dataset": {"manifest": str, "cache_dir": str},
    "representation": {"kind": str},
    "descriptors": {
        "stride": int,
        "num_scales": int,
        "scale_step": float,
        "upscale_factor": int,
        "base_patch": int,
        "window": str,
    },
    "pca": {"pca_dim": ("dim", int), "pca_seed": ("seed", int),
            "pca_sample_cap": ("sample_cap", int)},
    "gmm": {
        "gmm_k": ("k", int),
        "gmm_seed": ("seed", int),
        "gmm_max_iters": ("max_iters", int),
        "gmm_tol": ("tol", float),
        "gmm_samples_per_image": ("samples_per_image", int),
    },
    "fv": {
        "fv_normalisation": ("normalisation", str),
        "fv_spatial": ("spatial", str),
        "fv_colour": ("colour", str),
    },
    "cnn": {"cnn_model": ("model", str)},
    "augment": {
        "aug_kind": ("kind", str),
        "fusion_train": str,
        "fusion_test": str,
        "aug_target": ("target", int),
    },
    "svm": {
        "svm_c_grid": ("c_grid", "floats"),
        "svm_seed": ("seed", int),
        "svm_metric": ("metric", str),
        "svm_val_fraction": ("val_fraction", float),
        "svm_retrain_trainval": ("retrain_trainval", "bool"),
        "svm_exclude_difficult": ("exclude_difficult", "bool"),
    },
    "eval": {"eval_metrics": ("metrics", "strs"), "eval_top_k": ("top_k", int)},
}


def _convert(raw: str, conv):
    if conv == "floats":
        return tuple(float(t) for t in raw.split(",") if t.strip())
    if conv == "strs":
        return tuple(t.strip() for t in raw.split(",") if t.strip())
    if conv == "bool":
        low = raw.strip().lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise DataError(f"not a boolean: {raw!r}")
    return conv(raw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"config not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise DataError(f"cannot parse config {path}: {exc}")

    values = {}
    for section, mapping in _SECTIONS.items():
        if not parser.has_section(section):
            continue
        for field_name, spec in mapping.items():
            key, conv = (field_name, spec) if not isinstance(spec, tuple) else spec
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                try:
                    values[field_name] = _convert(raw, conv)
                except (ValueError, DataError) as exc:
                    raise DataError(
                        f"config {path} [{section}] {key}: bad value {raw!r} ({exc})"
                    )

    cfg = ExperimentConfig(**values)

    # seeds must be explicit (no hidden randomness defaults)
    needed = [("experiment", "seed"), ("svm", "seed")]
    if cfg.kind in ("fv", "fv+cnn"):
        needed += [("pca", "seed"), ("gmm", "seed")]
    for section, key in needed:
        if not (parser.has_section(section) and parser.has_option(section, key)):
            raise DataError(f"config {path} must set [{section}] {key} explicitly")

    # resolve relative paths against the config's directory
    base = path.parent
    updates = {}
    if cfg.manifest and not Path(cfg.manifest).is_absolute():
        updates["manifest"] = str(base / cfg.manifest)
    if cfg.cache_dir and not Path(cfg.cache_dir).is_absolute():
        updates["cache_dir"] = str(base / cfg.cache_dir)
    if cfg.cnn_model and not Path(cfg.cnn_model).is_absolute():
        updates["cnn_model"] = str(base / cfg.cnn_model)
    if updates:
        from dataclasses import replace

        cfg = replace(cfg, **updates)
    return cfg
