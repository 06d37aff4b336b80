"""Deterministic mini-batch training with RMSprop and early stopping.

One optimizer step per mini-batch with a step counter shared by every
parameter tensor; validation loss is monitored after each epoch and
training stops once it has gone `patience` consecutive epochs without a
strict improvement. All shuffling, splitting and dropout randomness flows
from the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import FusedDataset
from .errors import ConfigError, NumericFault, TrainingError
from .model import Model, backward_pass, batch_arrays, weights_digest, _forward
from .ops import RmspropState, bce_loss, rmsprop_step
from .rng import Rng

RMSPROP_RHO = 0.9
RMSPROP_EPS = 1e-7


@dataclass
class TrainConfig:
    lr0: float = 1e-4
    decay: float = 1e-7
    batch_size: int = 12
    max_epochs: int = 160
    patience: int = 10
    val_fraction: float = 0.2
    seed: int = 0
    restore_best: bool = True

    def validate(self) -> None:
        if not 0 < self.val_fraction < 1:
            raise ConfigError(f"val_fraction must be in (0, 1), got {self.val_fraction}")
        if self.patience < 1 or self.patience > self.max_epochs:
            raise ConfigError("patience must be in [1, max_epochs]")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be positive")
        if self.lr0 < 0 or self.decay < 0:
            raise ConfigError("lr0 and decay must be non-negative")


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)

    stopped_epoch: int = 0
    best_epoch: int = 0
    weights_digest: str = ""


def split_sizes(n: int, val_fraction: float) -> tuple[int, int]:
    """Training split size is floor((1 - val_fraction) * n); the rest validates."""
    train_n = math.floor((1.0 - val_fraction) * n)
    return train_n, n - train_n


def validation_split_indices(n: int, cfg: TrainConfig) -> tuple[np.ndarray, np.ndarray]:
    """The seed-determined (train, validation) index split used by train()."""
    perm = Rng(cfg.seed).spawn("split").permutation(n)
    train_n, _ = split_sizes(n, cfg.val_fraction)
    return perm[:train_n], perm[train_n:]


def evaluate_probabilities(model: Model, x, r, batch_size: int = 64) -> np.ndarray:
    """Eval-mode probabilities in fixed-size chunks (bounds peak memory)."""
    out = []
    for s in range(0, x.shape[0], batch_size):
        rb = None if r is None else r[s : s + batch_size]
        p, _ = _forward(model, x[s : s + batch_size], rb, "eval", None)
        out.append(p)
    return np.concatenate(out)


def train(model: Model, dataset: FusedDataset, cfg: TrainConfig) -> tuple[Model, TrainReport]:
    """Train a copy of ``model`` on the dataset; the input model is untouched.

    Shuffles with the config seed, splits off the validation fraction,
    iterates mini-batches (the final short batch is trained on), applies one
    RMSprop step per batch, and early-stops on non-improving validation
    loss. With restore_best the returned parameters are the best-validation
    epoch's.
    """
    cfg.validate()
    if not dataset.samples:
        raise TrainingError("dataset is empty")
    x, r, y = batch_arrays(dataset.samples, dtype=model.conv.kernels.dtype)

    rng = Rng(cfg.seed)
    train_idx, val_idx = validation_split_indices(len(y), cfg)
    train_n, val_n = len(train_idx), len(val_idx)
    if train_n < 1 or val_n < 1:
        raise TrainingError(
            f"{len(y)} samples leave an empty split at val_fraction={cfg.val_fraction}"
        )
    if len(np.unique(y[train_idx])) < 2:
        raise TrainingError("training split contains a single class")

    shuffle_rng = rng.spawn("shuffle")
    dropout_rng = rng.spawn("dropout")

    model = model.clone()
    mean_square = {k: np.zeros_like(v) for k, v in model.params().items()}
    step = 0

    x_val, y_val = x[val_idx], y[val_idx]
    r_val = None if r is None else r[val_idx]

    report = TrainReport()
    best_val = math.inf
    best_epoch = 0
    best_params = None
    since_improve = 0
    stopped = cfg.max_epochs

    for epoch in range(1, cfg.max_epochs + 1):
        order = train_idx[shuffle_rng.permutation(train_n)]
        loss_sum = 0.0
        correct = 0
        for s in range(0, train_n, cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            rb = None if r is None else r[idx]
            p, cache = _forward(model, x[idx], rb, "train", dropout_rng)
            loss, grad_p = bce_loss(p, y[idx])
            if not math.isfinite(loss):
                raise NumericFault(f"non-finite training loss at epoch {epoch}")
            grads = backward_pass(model, cache, grad_p)
            params = model.params()
            updated = {}
            for name, value in params.items():
                new_value, state = rmsprop_step(
                    value,
                    grads[name],
                    RmspropState(mean_square[name], step),
                    cfg.lr0,
                    cfg.decay,
                    RMSPROP_RHO,
                    RMSPROP_EPS,
                )
                updated[name] = new_value
                mean_square[name] = state.mean_square
            model.set_params(updated)
            step += 1
            loss_sum += loss * len(idx)
            correct += int(np.sum((p > 0.5) == (y[idx] > 0.5)))

        p_val = evaluate_probabilities(model, x_val, r_val, cfg.batch_size)
        val_loss, _ = bce_loss(p_val, y_val)
        if not math.isfinite(val_loss):
            raise NumericFault(f"non-finite validation loss at epoch {epoch}")

        report.train_loss.append(loss_sum / train_n)
        report.train_accuracy.append(correct / train_n)
        report.val_loss.append(val_loss)
        report.val_accuracy.append(float(np.mean((p_val > 0.5) == (y_val > 0.5))))

        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.params().items()}
            since_improve = 0
        else:
            since_improve += 1
            if since_improve == cfg.patience:
                stopped = epoch
                break

    if cfg.restore_best and best_params is not None:
        model.set_params(best_params)

    report.stopped_epoch = stopped
    report.best_epoch = best_epoch
    report.weights_digest = weights_digest(model)
    return model, report
