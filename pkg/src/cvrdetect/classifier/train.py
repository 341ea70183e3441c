"""Minibatch Adam training with early stopping on a held-out slice.

Normalization stats are computed on the fitting portion (the data gradient
descent actually sees) and stored on the model so prediction after restore is
bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cvr import ModalityVolume, compute_stats, normalize_volume
from ..errors import DataError, NumericError
from ..nn import AdamState, adam_step, batch_bce
from .model import ConvNet3D


@dataclass
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 20
    epochs: int = 100
    seed: int = 0
    patience: int = 10      # epochs without val-accuracy improvement
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.lr <= 0:
            raise DataError(f"lr must be > 0, got {self.lr}")
        if self.batch_size < 1:
            raise DataError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class EpochStats:
    epoch: int
    loss: float
    train_acc: float
    val_acc: float


def _accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    pred = logits > 0.0
    return float(np.mean(pred == (labels > 0.5)))


def _stratified_split(labels: np.ndarray, val_fraction: float,
                      rng: np.random.Generator):
    val_idx = []
    for cls in (0, 1):
        idx = np.flatnonzero(labels == cls)
        k = int(len(idx) * val_fraction)
        if k > 0:
            val_idx.extend(rng.permutation(idx)[:k].tolist())
    val_mask = np.zeros(len(labels), dtype=bool)
    val_mask[val_idx] = True
    return np.flatnonzero(~val_mask), np.flatnonzero(val_mask)


def train(model: ConvNet3D, dataset: list[tuple[ModalityVolume, int]],
          config: TrainConfig) -> tuple[ConvNet3D, list[EpochStats]]:
    """Train in place; returns the model (best-val-accuracy parameters) and
    per-epoch history."""
    if not dataset:
        raise DataError("training dataset is empty")
    labels = np.array([int(l) for _, l in dataset])
    if len(set(labels.tolist())) < 2:
        raise DataError("training dataset contains a single class")
    shapes = {v.tensor.shape for v, _ in dataset}
    if len(shapes) != 1:
        raise DataError(f"inconsistent volume shapes in dataset: {shapes}")
    if next(iter(shapes)) != model.input_shape:
        raise DataError(
            f"dataset volumes {next(iter(shapes))} do not match model input "
            f"{model.input_shape}")

    rng = np.random.default_rng(config.seed)
    fit_idx, val_idx = _stratified_split(labels, config.val_fraction, rng)
    if len(set(labels[fit_idx].tolist())) < 2:
        raise DataError("fitting portion lost a class; reduce val_fraction")

    stats = compute_stats([dataset[i][0].tensor for i in fit_idx])
    model.stats = stats
    x_all = np.stack([normalize_volume(v, stats).tensor for v, _ in dataset])
    y_all = labels.astype(np.float64)

    net = model.network
    state = AdamState.for_params(net.parameters(), lr=config.lr)
    best_val = -1.0
    best_params = None
    best_epoch = 0
    since_best = 0
    history: list[EpochStats] = []

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(fit_idx)
        losses = []
        correct = 0
        for i in range(0, len(order), config.batch_size):
            batch = order[i:i + config.batch_size]
            xb, yb = x_all[batch], y_all[batch]
            logits = net.forward(xb, keep_activations=True)
            loss, dlogit = batch_bce(logits, yb)
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}; aborting run")
            net.backward(dlogit)
            net.set_parameters(adam_step(net.parameters(), net.gradients(), state))
            losses.append(loss)
            correct += int(np.sum((logits > 0) == (yb > 0.5)))

        train_acc = correct / len(order)
        if len(val_idx):
            val_logits = net.forward(x_all[val_idx])
            val_acc = _accuracy(val_logits, y_all[val_idx])
        else:
            val_acc = float("nan")
        history.append(EpochStats(epoch, float(np.mean(losses)), train_acc, val_acc))

        if len(val_idx):
            if val_acc > best_val:
                best_val = val_acc
                best_params = [p.copy() for p in net.parameters()]
                best_epoch = epoch
                since_best = 0
            else:
                since_best += 1
                if since_best >= config.patience:
                    break

    if best_params is not None:
        net.set_parameters(best_params)
        model.epoch = best_epoch
    else:
        model.epoch = len(history)
    return model, history
