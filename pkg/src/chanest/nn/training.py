"""Minibatch training loop with validation split and checkpointing."""

from dataclasses import dataclass, field

import numpy as np

from ..seeding import DOMAIN_TRAIN, derived_rng
from .graph import mse_loss
from .optim import Adam, lr_at_epoch


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for one training run.

    ``select`` picks which weights survive: "best_val" restores the
    epoch with the lowest validation loss, "last" keeps the final
    weights.  With ``val_fraction`` 0 there is no held-out split and
    selection silently degrades to "last".
    """

    epochs: int = 50
    batch_size: int = 128
    initial_lr: float = 1e-3
    lr_drop_period: int = 0
    lr_drop_factor: float = 1.0
    val_fraction: float = 0.2
    select: str = "best_val"
    seed: int = 0
    shuffle_each_epoch: bool = True
    log_every: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in [0, 1)")
        if self.select not in ("best_val", "last"):
            raise ValueError(f"unknown selection rule {self.select!r}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    lr: float
    train_loss: float
    val_loss: float


@dataclass
class TrainResult:
    trace: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float("nan")

    @property
    def final_train_loss(self):
        return self.trace[-1].train_loss if self.trace else float("nan")


def _snapshot(params):
    return [p.copy() for p in params]


def _restore(params, snapshot):
    for p, s in zip(params, snapshot):
        p[...] = s


def train(model, inputs, targets, config, progress=None):
    """Fit ``model`` to (inputs, targets) with Adam on MSE loss.

    The sample axis is split into train/validation once, up front, with
    a permutation drawn from the run seed; batches reshuffle every
    epoch from the same stream, so a fixed seed reproduces the entire
    trajectory.  Returns a TrainResult; the model is updated in place.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if inputs.shape[0] != targets.shape[0]:
        raise ValueError(
            f"{inputs.shape[0]} inputs vs {targets.shape[0]} targets"
        )
    n = inputs.shape[0]
    if n == 0:
        raise ValueError("empty training set")

    rng = derived_rng(config.seed, DOMAIN_TRAIN)
    perm = rng.permutation(n)
    n_val = int(round(n * config.val_fraction))
    n_train = n - n_val
    if n_train < 1:
        raise ValueError("validation split leaves no training samples")
    train_idx = perm[:n_train]
    val_idx = perm[n_train:]

    params = model.params()
    optimizer = Adam()
    result = TrainResult()
    best = None

    for epoch in range(1, config.epochs + 1):
        lr = lr_at_epoch(
            config.initial_lr, epoch, config.lr_drop_period, config.lr_drop_factor
        )
        order = rng.permutation(n_train) if config.shuffle_each_epoch else np.arange(n_train)
        total = 0.0
        for start in range(0, n_train, config.batch_size):
            idx = train_idx[order[start:start + config.batch_size]]
            xb = inputs[idx]
            yb, caches, _ = model.forward(xb, training=True, keep_caches=True)
            loss, dy = mse_loss(yb, targets[idx])
            _, grads = model.backward(dy, caches)
            optimizer.step(params, grads, lr)
            total += loss * xb.shape[0]
        train_loss = total / n_train

        if n_val:
            val_pred = model.predict(inputs[val_idx], batch_size=config.batch_size)
            val_loss, _ = mse_loss(val_pred, targets[val_idx])
        else:
            val_loss = float("nan")

        result.trace.append(EpochStats(epoch, lr, train_loss, val_loss))
        if n_val and (best is None or val_loss < result.best_val_loss):
            result.best_epoch = epoch
            result.best_val_loss = val_loss
            if config.select == "best_val":
                best = _snapshot(params)
        if progress is not None and (
            config.log_every and (epoch % config.log_every == 0 or epoch == config.epochs)
        ):
            progress(result.trace[-1])

    if config.select == "best_val" and best is not None:
        _restore(params, best)
    return result
