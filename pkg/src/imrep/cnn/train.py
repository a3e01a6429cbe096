"""SGD training with momentum/weight decay, plateau-driven learning-rate
drops, training-time augmentation, and staged fine-tuning."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from imrep.augment import colour_jitter, prepare_train_frame, random_train_crop
from imrep.cnn.arch import ArchitectureSpec
from imrep.cnn.layers import LayerSpec
from imrep.cnn.losses import loss as loss_fn
from imrep.cnn.network import (
    NetworkState,
    reinit_layer,
    run_backward,
    run_forward,
    scores_index,
)
from imrep.errors import DataError, NumericalError
from imrep.image import RasterImage, center_crop, resize_min_side

# staged (last layer lr, hidden layer lr) schedule used for fine-tuning
FINE_TUNE_SCHEDULE = ((1e-2, 1e-4), (1e-3, 1e-4), (1e-4, 1e-4), (1e-5, 1e-5))


@dataclass(frozen=True)
class SgdHyper:
    lr: float = 1e-2
    momentum: float = 0.9
    weight_decay: float = 5e-4


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    lr: float = 1e-2
    momentum: float = 0.9
    weight_decay: float = 5e-4
    seed: int = 0
    # learning rate drops by 10x after this many non-improving validations
    plateau_patience: int = 2
    random_crop: bool = True
    colour_jitter_strength: float = 0.0
    input_offset: float = 0.5
    loss_kind: str = "softmax_ce"


def sgd_step(
    state: NetworkState,
    grads: dict,
    hyper: SgdHyper,
    lr_overrides: dict | None = None,
) -> NetworkState:
    """v <- m*v - lr*(g + wd*w); w <- w + v.

    Raises NumericalError (leaving the state untouched) on non-finite
    gradients. ``lr_overrides`` maps a layer name to a per-group learning
    rate, overriding ``hyper.lr`` for that layer's parameters.
    """
    for key, g in grads.items():
        if key not in state.params:
            raise DataError(f"gradient for unknown parameter {key!r}")
        if g.shape != state.params[key].shape:
            raise DataError(f"gradient shape mismatch for {key!r}")
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for {key!r}")
    for key, g in grads.items():
        w = state.params[key]
        v = state.momentum[key]
        lr = hyper.lr
        if lr_overrides:
            lr = lr_overrides.get(key.split(".")[0], hyper.lr)
        v *= hyper.momentum
        v -= lr * (g + hyper.weight_decay * w)
        w += v
    return state


def to_batch(samples: list[RasterImage], offset: float = 0.5) -> np.ndarray:
    """Stack images into an (N, C, H, W) float32 tensor, offset-centred."""
    arr = np.stack([img.data.transpose(2, 0, 1) for img in samples])
    return (arr - offset).astype(np.float32)


def _centre_sample(image: RasterImage, side: int) -> RasterImage:
    return center_crop(resize_min_side(image, side), side, side)


def train_batch_step(
    state: NetworkState,
    spec: ArchitectureSpec,
    batch: np.ndarray,
    labels,
    hyper: SgdHyper,
    kind: str = "softmax_ce",
    seed: int = 0,
    lr_overrides: dict | None = None,
) -> float:
    """One forward/backward/update on a prepared batch; returns the loss.

    Hinge losses are plain sums, so their gradients are divided by the
    batch size here to keep learning rates comparable with the mean-reduced
    softmax loss.
    """
    state.set_mode("train")
    acts, caches = run_forward(state, spec, batch, seed=seed)
    si = scores_index(spec)
    value, dscores = loss_fn(acts[si], labels, kind)
    if kind != "softmax_ce":
        dscores = dscores / batch.shape[0]
    grads, _ = run_backward(state, spec, caches, dscores, upto=si)
    sgd_step(state, grads, hyper, lr_overrides)
    return value


def predict_labels(
    state: NetworkState,
    spec: ArchitectureSpec,
    images: list[RasterImage],
    input_offset: float = 0.5,
    batch_size: int = 64,
) -> np.ndarray:
    """Argmax class predictions from centre-crop samples in eval mode."""
    mode = state.mode
    state.set_mode("eval")
    preds = []
    for i in range(0, len(images), batch_size):
        chunk = images[i : i + batch_size]
        batch = to_batch(
            [_centre_sample(img, spec.input_size) for img in chunk], input_offset
        )
        acts, _ = run_forward(state, spec, batch, seed=0)
        preds.append(np.argmax(acts[scores_index(spec)], axis=1))
    state.set_mode(mode)
    return np.concatenate(preds)


def _augmented_sample(
    image: RasterImage,
    cfg: TrainConfig,
    spec: ArchitectureSpec,
    crop_seed,
    rgb_pca,
) -> RasterImage:
    if cfg.random_crop:
        frame = prepare_train_frame(image, spec.input_size)
        sample = random_train_crop(frame, spec.input_size, crop_seed)
    else:
        sample = _centre_sample(image, spec.input_size)
    if cfg.colour_jitter_strength > 0.0 and rgb_pca is not None:
        basis, eigvals = rgb_pca
        sample = colour_jitter(
            sample, basis, eigvals, cfg.colour_jitter_strength, crop_seed
        )
    return sample


def train_network(
    state: NetworkState,
    spec: ArchitectureSpec,
    train_images: list[RasterImage],
    train_labels: np.ndarray,
    cfg: TrainConfig,
    val_images: list[RasterImage] | None = None,
    val_labels: np.ndarray | None = None,
    rgb_pca=None,
) -> dict:
    """Epoch-based SGD training with random crop/flip (and optional colour
    jitter) augmentation. When a validation split is given, the learning
    rate drops by 10x each time the validation error has not improved for
    ``plateau_patience`` consecutive epochs.
    """
    n = len(train_images)
    if n == 0:
        raise DataError("no training images")
    labels = np.asarray(train_labels)
    hyper = SgdHyper(cfg.lr, cfg.momentum, cfg.weight_decay)
    history = {"train_loss": [], "val_error": [], "lr": []}
    best_val = np.inf

    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        total, batches = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            samples = [
                _augmented_sample(
                    train_images[i], cfg, spec, [cfg.seed, epoch, int(i)], rgb_pca
                )
                for i in idx
            ]
            batch = to_batch(samples, cfg.input_offset)
            batch_labels = labels[idx]
            total += train_batch_step(
                state, spec, batch, batch_labels, hyper,
                kind=cfg.loss_kind, seed=epoch * 100003 + start,
            )
            batches += 1
        history["train_loss"].append(total / max(batches, 1))
        history["lr"].append(hyper.lr)

        if val_images:
            preds = predict_labels(state, spec, val_images, cfg.input_offset)
            err = float(np.mean(preds != np.asarray(val_labels)))
            history["val_error"].append(err)
            if err < best_val - 1e-6:
                best_val = err
                state.plateau = 0
            else:
                state.plateau += 1
                if state.plateau >= cfg.plateau_patience:
                    hyper = replace(hyper, lr=hyper.lr / 10.0)
                    state.lr_drops += 1
                    state.plateau = 0
    return history


def _spec_with_classes(spec: ArchitectureSpec, num_classes: int) -> ArchitectureSpec:
    layers = []
    for layer in spec.layers:
        if layer.name == "full8":
            layers.append(LayerSpec(kind="fully_connected", name="full8", out_dim=num_classes))
        else:
            layers.append(layer)
    return ArchitectureSpec(
        name=spec.name,
        layers=tuple(layers),
        num_classes=num_classes,
        input_size=spec.input_size,
        in_channels=spec.in_channels,
    )


def fine_tune(
    state: NetworkState,
    spec: ArchitectureSpec,
    images: list[RasterImage],
    targets: np.ndarray,
    kind: str,
    cfg: TrainConfig,
    schedule=FINE_TUNE_SCHEDULE,
    epochs_per_stage: int = 2,
    rgb_pca=None,
):
    """Continue training on target data with a re-initialised last layer.

    The last layer and the hidden layers follow separate learning rates per
    schedule stage; training stops when the schedule is exhausted. Targets
    are integer labels for softmax_ce and (N, C) +-1 matrices for the hinge
    losses. Returns (state, spec, history).
    """
    targets = np.asarray(targets)
    num_classes = (
        int(targets.max()) + 1 if targets.ndim == 1 else targets.shape[1]
    )
    ft_spec = _spec_with_classes(spec, num_classes)
    reinit_layer(state, "full8", num_classes, cfg.seed)

    n = len(images)
    history = {"stage_loss": [], "train_loss": []}
    for stage, (lr_last, lr_hidden) in enumerate(schedule):
        hyper = SgdHyper(lr_hidden, cfg.momentum, cfg.weight_decay)
        overrides = {"full8": lr_last}
        stage_losses = []
        for epoch in range(epochs_per_stage):
            order = np.random.default_rng([cfg.seed, stage, epoch]).permutation(n)
            total, batches = 0.0, 0
            for start in range(0, n, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                samples = [
                    _augmented_sample(
                        images[i], cfg, ft_spec, [cfg.seed, stage, epoch, int(i)],
                        rgb_pca,
                    )
                    for i in idx
                ]
                batch = to_batch(samples, cfg.input_offset)
                total += train_batch_step(
                    state, ft_spec, batch, targets[idx], hyper,
                    kind=kind, seed=stage * 7919 + epoch, lr_overrides=overrides,
                )
                batches += 1
            stage_losses.append(total / max(batches, 1))
        history["stage_loss"].append(stage_losses)
        history["train_loss"].extend(stage_losses)
    return state, ft_spec, history
