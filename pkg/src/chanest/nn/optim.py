"""First-order optimizers and the stepped learning-rate schedule."""

import numpy as np


class Adam:
    """Adam with bias correction; updates parameter arrays in place.

    Moment buffers are keyed by position in the parameter list, so the
    same optimizer instance must always be fed the same list layout.
    """

    def __init__(self, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self._m = None
        self._v = None

    def step(self, params, grads, lr):
        if len(params) != len(grads):
            raise ValueError(f"{len(params)} params vs {len(grads)} grads")
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        correction1 = 1.0 - b1 ** self.t
        correction2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m += (1.0 - b1) * (g - m)
            v += (1.0 - b2) * (g * g - v)
            p -= lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


def lr_at_epoch(initial_lr, epoch, drop_period=0, drop_factor=1.0):
    """Stepped schedule: multiply by drop_factor every drop_period epochs.

    ``epoch`` is 1-based; with period 20 and factor 0.5, epochs 1-20 run
    at the initial rate, 21-40 at half, and so on.  A period of 0
    disables the schedule.
    """
    if epoch < 1:
        raise ValueError(f"epoch is 1-based, got {epoch}")
    if drop_period <= 0:
        return float(initial_lr)
    return float(initial_lr) * float(drop_factor) ** ((epoch - 1) // drop_period)
