"""Shared test utilities: finite-difference gradient probing."""

import numpy as np

from chanest.nn import (
    Add,
    BatchNorm,
    BilinearUpsample,
    Conv2D,
    Dense,
    ModelGraph,
    ReLU,
    TransposedConv2D,
    mse_loss,
)


def fd_worst(model, x, n_probes, rng, eps=1e-6):
    """Worst relative error between backprop and central differences.

    Probes random scalar coordinates of every parameter array and of the
    input, comparing the analytic gradient of the MSE loss against
    (L(+eps) - L(-eps)) / (2 eps).
    """
    x = np.array(x, dtype=np.float64)
    target = rng.normal(size=(x.shape[0], *model.output_shape))

    def loss_now():
        return mse_loss(model.forward(x, training=True), target)[0]

    y, caches, _ = model.forward(x, training=True, keep_caches=True)
    _, dy = mse_loss(y, target)
    dx, grads = model.backward(dy, caches)
    arrays = list(zip(model.params(), grads)) + [(x, dx)]
    worst = 0.0
    for k in range(n_probes):
        arr, grad = arrays[k % len(arrays)]
        if arr.size == 0:
            continue
        flat_idx = int(rng.integers(arr.size))
        idx = np.unravel_index(flat_idx, arr.shape)
        old = arr[idx]
        arr[idx] = old + eps
        lp = loss_now()
        arr[idx] = old - eps
        lm = loss_now()
        arr[idx] = old
        numeric = (lp - lm) / (2 * eps)
        analytic = grad[idx]
        scale = max(abs(numeric), abs(analytic))
        if scale < 1e-7:
            # Both sides vanish below the resolution of the central
            # difference (loss roundoff / 2 eps), e.g. a bias feeding a
            # batch-norm layer; there is nothing to compare.
            continue
        worst = max(worst, abs(numeric - analytic) / scale)
    return worst


def layer_kind_cases():
    """One small graph per layer kind, with an input shape to probe."""
    return {
        "FullyConnected": (ModelGraph((5,), [Dense(5, 4)]), (3, 5)),
        "ReLU": (ModelGraph((6,), [Dense(6, 6), ReLU()]), (3, 6)),
        "Conv2D": (
            ModelGraph((7, 6, 3), [Conv2D(3, 4, kernel=(3, 2), stride=(2, 1),
                                          padding=(1, 0))]),
            (2, 7, 6, 3),
        ),
        "TransposedConv2D": (
            ModelGraph((4, 2, 3), [TransposedConv2D(3, 2, kernel=5,
                                                    stride=(3, 7), padding=(1, 0))]),
            (2, 4, 2, 3),
        ),
        "BatchNorm": (
            ModelGraph((4, 3, 5), [Conv2D(5, 5, kernel=1), BatchNorm(5)]),
            (4, 4, 3, 5),
        ),
        "Add": (
            ModelGraph((4, 3, 2),
                       [Conv2D(2, 2, kernel=3), ReLU(), Conv2D(2, 2, kernel=3),
                        Add(0), Conv2D(2, 2, kernel=3), Add(0, subtract=True)]),
            (2, 4, 3, 2),
        ),
        "BilinearUpsample": (
            ModelGraph((4, 2, 3),
                       [Conv2D(3, 3, kernel=3), BilinearUpsample((9, 7))]),
            (2, 4, 2, 3),
        ),
    }
