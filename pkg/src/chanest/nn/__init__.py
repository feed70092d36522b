"""Small reverse-mode neural-network engine on float64 numpy arrays."""

from .graph import ModelGraph, mse_loss
from .layers import (
    Add,
    BatchNorm,
    BilinearUpsample,
    Conv2D,
    Dense,
    ReLU,
    TransposedConv2D,
)
from .optim import Adam, lr_at_epoch
from .training import EpochStats, TrainConfig, TrainResult, train
from .weights_io import (
    load_weights,
    save_weights,
    weight_fingerprint,
    weights_to_bytes,
)

__all__ = [
    "Add",
    "Adam",
    "BatchNorm",
    "BilinearUpsample",
    "Conv2D",
    "Dense",
    "EpochStats",
    "ModelGraph",
    "ReLU",
    "TrainConfig",
    "TrainResult",
    "TransposedConv2D",
    "load_weights",
    "lr_at_epoch",
    "mse_loss",
    "save_weights",
    "train",
    "weight_fingerprint",
    "weights_to_bytes",
]
