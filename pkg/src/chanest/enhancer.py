"""Denoising-style autoencoder that augments 2-channel grid inputs.

A four-layer fully connected autoencoder is trained to reconstruct
flattened real/imag grids from themselves.  Its encoder output (half
the input width) has exactly one value per grid cell, so it reshapes
into a third plane stacked behind the untouched real and imaginary
channels.  Downstream estimators then consume 3-channel inputs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .nn import Dense, ModelGraph, ReLU, TrainConfig, train
from .seeding import DOMAIN_INIT, derived_rng

# Layer index of the encoder activation inside the autoencoder graph.
_TAP_POST_RELU = 3
_TAP_PRE_RELU = 2


@dataclass(frozen=True)
class AeConfig:
    """Geometry of the grids the autoencoder consumes."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"bad grid geometry {self.rows}x{self.cols}")

    @property
    def cells(self):
        return self.rows * self.cols

    @property
    def width(self):
        """Flattened input width: real block plus imaginary block."""
        return 2 * self.cells


def flatten_grids(grids):
    """(B, rows, cols, 2) -> (B, 2*rows*cols); channel blocks, row-major."""
    grids = np.asarray(grids, dtype=np.float64)
    if grids.ndim != 4 or grids.shape[-1] != 2:
        raise ShapeError(f"expected (B, rows, cols, 2), got {grids.shape}")
    b = grids.shape[0]
    return grids.transpose(0, 3, 1, 2).reshape(b, -1)


def unflatten_grids(flat, config):
    """Inverse of flatten_grids for the given geometry."""
    flat = np.asarray(flat, dtype=np.float64)
    if flat.ndim != 2 or flat.shape[1] != config.width:
        raise ShapeError(
            f"expected (B, {config.width}), got {flat.shape}"
        )
    b = flat.shape[0]
    return flat.reshape(b, 2, config.rows, config.cols).transpose(0, 2, 3, 1)


def build_ae(config, seed=None):
    """Autoencoder 2K -> 2K -> K -> K -> 2K with ReLU except the last."""
    k, two_k = config.cells, config.width
    model = ModelGraph(
        (two_k,),
        [
            Dense(two_k, two_k),
            ReLU(),
            Dense(two_k, k),
            ReLU(),
            Dense(k, k),
            ReLU(),
            Dense(k, two_k),
        ],
        name=f"ae-{config.rows}x{config.cols}",
    )
    if seed is not None:
        model.initialize(derived_rng(seed, DOMAIN_INIT))
    return model


def train_ae(model, grids, config=None, seed=0):
    """Self-supervised fit: reconstruct each flattened grid from itself."""
    flat = flatten_grids(grids)
    if config is None:
        config = TrainConfig(seed=seed)
    return train(model, flat, flat, config)


def extract_features(model, grids, pre_relu=False):
    """Encoder activations, one value per grid cell: (B, rows, cols).

    The default tap sits after the encoder's ReLU, so features are
    non-negative by construction; ``pre_relu`` taps the raw affine
    output instead.
    """
    grids = np.asarray(grids, dtype=np.float64)
    rows, cols = grids.shape[1:3]
    flat = flatten_grids(grids)
    tap = _TAP_PRE_RELU if pre_relu else _TAP_POST_RELU
    cur = flat
    for layer in model.layers[: tap + 1]:
        cur, _ = layer.forward(cur, training=False)
    if cur.shape[1] != rows * cols:
        raise ShapeError(
            f"encoder width {cur.shape[1]} does not cover a {rows}x{cols} grid"
        )
    return cur.reshape(-1, rows, cols)


def enhance(model, grids, pre_relu=False, normalize="none"):
    """Stack the encoder feature plane behind the two input channels.

    Channels 0 and 1 of the result are the input arrays unchanged;
    channel 2 is the feature plane.  ``normalize="rms"`` rescales the
    feature plane to the RMS of the first two channels, which keeps the
    third channel on the same footing for mixed-magnitude inputs.
    """
    grids = np.asarray(grids, dtype=np.float64)
    feats = extract_features(model, grids, pre_relu=pre_relu)
    if normalize == "rms":
        ref = np.sqrt(np.mean(grids * grids))
        cur = np.sqrt(np.mean(feats * feats))
        if cur > 0:
            feats = feats * (ref / cur)
    elif normalize != "none":
        raise ValueError(f"unknown normalize mode {normalize!r}")
    return np.concatenate([grids, feats[..., None]], axis=-1)
