"""Serialisers mapping fitted models onto the sectioned container format.

A network file's section table doubles as the layer manifest: each
parameter lives in its own section ("param:conv1.w", ...) whose entry
records name, byte offset and shape; an "arch" JSON section carries the
layer specs.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from imrep.cnn.arch import ArchitectureSpec
from imrep.cnn.layers import LayerSpec
from imrep.cnn.network import NetworkState
from imrep.errors import DataError
from imrep.gmm import GmmModel
from imrep.harness.container import read_sections, write_sections
from imrep.reduce import PcaModel
from imrep.svm import LinearModel


def save_pca(path, model: PcaModel) -> None:
    write_sections(path, {"pca:mean": model.mean, "pca:basis": model.basis})


def load_pca(path) -> PcaModel:
    s = read_sections(path)
    return PcaModel(mean=s["pca:mean"], basis=s["pca:basis"])


def save_gmm(path, model: GmmModel) -> None:
    write_sections(
        path,
        {
            "gmm:means": model.means,
            "gmm:variances": model.variances,
            "gmm:weights": model.weights,
        },
    )


def load_gmm(path) -> GmmModel:
    s = read_sections(path)
    return GmmModel(
        means=s["gmm:means"], variances=s["gmm:variances"], weights=s["gmm:weights"]
    )


def save_svm(path, model: LinearModel) -> None:
    meta = json.dumps({"c": model.c, "classes": list(model.classes)})
    write_sections(
        path,
        {
            "svm:weights": model.weights,
            "svm:biases": model.biases,
            "svm:meta": meta.encode("utf-8"),
        },
    )


def load_svm(path) -> LinearModel:
    s = read_sections(path)
    meta = json.loads(s["svm:meta"].decode("utf-8"))
    return LinearModel(
        weights=s["svm:weights"],
        biases=s["svm:biases"],
        c=meta["c"],
        classes=tuple(meta["classes"]),
    )


def save_network(path, state: NetworkState, spec: ArchitectureSpec) -> None:
    arch = {
        "name": spec.name,
        "num_classes": spec.num_classes,
        "input_size": spec.input_size,
        "in_channels": spec.in_channels,
        "mode": state.mode,
        "layers": [asdict(l) for l in spec.layers],
    }
    sections = {"arch": json.dumps(arch).encode("utf-8")}
    for key, value in state.params.items():
        sections[f"param:{key}"] = value
    for key, value in state.momentum.items():
        sections[f"momentum:{key}"] = value
    write_sections(path, sections)


def load_network(path):
    s = read_sections(path)
    if "arch" not in s:
        raise DataError(f"{path} has no architecture section")
    arch = json.loads(s["arch"].decode("utf-8"))
    spec = ArchitectureSpec(
        name=arch["name"],
        layers=tuple(LayerSpec(**l) for l in arch["layers"]),
        num_classes=arch["num_classes"],
        input_size=arch["input_size"],
        in_channels=arch["in_channels"],
    )
    params = {}
    momentum = {}
    for key, value in s.items():
        if key.startswith("param:"):
            params[key[len("param:"):]] = np.asarray(value, dtype=np.float32)
        elif key.startswith("momentum:"):
            momentum[key[len("momentum:"):]] = np.asarray(value, dtype=np.float32)
    state = NetworkState(params=params, momentum=momentum, mode=arch.get("mode", "eval"))
    return state, spec
