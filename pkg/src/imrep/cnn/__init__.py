"""CNN architectures, layer engine, training, and feature extraction."""

from imrep.cnn.arch import (
    ARCHITECTURE_NAMES,
    ArchitectureSpec,
    build_architecture,
    full7_dim,
    scaled_architecture,
    shape_pipeline,
)
from imrep.cnn.layers import LayerSpec, TensorShape, output_shape
from imrep.cnn.losses import loss
from imrep.cnn.network import (
    NetworkState,
    extract_features,
    forward,
    init_network,
    run_backward,
    run_forward,
    scores_index,
)
from imrep.cnn.train import (
    FINE_TUNE_SCHEDULE,
    SgdHyper,
    TrainConfig,
    fine_tune,
    predict_labels,
    sgd_step,
    to_batch,
    train_network,
)

__all__ = [
    "ARCHITECTURE_NAMES",
    "ArchitectureSpec",
    "FINE_TUNE_SCHEDULE",
    "LayerSpec",
    "NetworkState",
    "SgdHyper",
    "TensorShape",
    "TrainConfig",
    "build_architecture",
    "extract_features",
    "fine_tune",
    "forward",
    "full7_dim",
    "init_network",
    "loss",
    "output_shape",
    "predict_labels",
    "run_backward",
    "run_forward",
    "scaled_architecture",
    "scores_index",
    "sgd_step",
    "shape_pipeline",
    "to_batch",
    "train_network",
]
