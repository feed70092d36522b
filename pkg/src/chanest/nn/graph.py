"""Sequential model graph with skip edges.

A model is a list of layers applied in order; ``Add`` layers pull a
second operand from the recorded output of an earlier layer, which is
enough to express residual blocks and global skips without a general
DAG.  Shapes are resolved once at construction so that mismatches fail
fast, before any data flows.
"""

import numpy as np

from ..errors import ShapeError
from .layers import Add, Layer

# When enabled, every layer output is checked for NaN/Inf.  Off by
# default; the checks roughly double small-batch overhead.
CHECK_FINITE = False


class ModelGraph:
    """Layers plus resolved shapes; owns forward/backward traversal."""

    def __init__(self, input_shape, layers, name="model"):
        self.name = name
        self.input_shape = tuple(int(d) for d in input_shape)
        self.layers = list(layers)
        shape = self.input_shape
        shapes = []
        for i, layer in enumerate(self.layers):
            if not isinstance(layer, Layer):
                raise TypeError(f"layer {i} is not a Layer: {layer!r}")
            if isinstance(layer, Add):
                if not 0 <= layer.source < i:
                    raise ShapeError(
                        f"layer {i} skip source {layer.source} is out of range"
                    )
                src_shape = shapes[layer.source]
                if src_shape != shape:
                    raise ShapeError(
                        f"layer {i} skip from {layer.source}: "
                        f"{src_shape} does not match {shape}"
                    )
            shape = layer.build(shape)
            shapes.append(shape)
        self.layer_shapes = shapes
        self.output_shape = shape

    # -- parameters ---------------------------------------------------
    def initialize(self, rng):
        """(Re)draw all weights from the given generator, in layer order."""
        for layer in self.layers:
            layer.init_params(rng)
        return self

    def params(self):
        """Flat list of parameter arrays, layer order preserved."""
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def param_count(self):
        return sum(layer.param_count() for layer in self.layers)

    def mac_count(self):
        """Multiply-accumulate count of one forward pass (one sample)."""
        return sum(layer.macs() for layer in self.layers)

    def manifest(self):
        """Architecture fingerprint: per layer (kind, config ints)."""
        return [(layer.kind, tuple(layer.config_ints())) for layer in self.layers]

    # -- data flow ----------------------------------------------------
    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != len(self.input_shape) + 1:
            raise ShapeError(
                f"{self.name} expects batched input of shape "
                f"(B, {', '.join(map(str, self.input_shape))}), got {x.shape}"
            )
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(
                f"{self.name} expects trailing shape {self.input_shape}, got {x.shape}"
            )
        return x

    def forward(self, x, training=False, keep_caches=False):
        """Run the graph; returns y, or (y, caches, outputs) if caching."""
        x = self._check_input(x)
        outputs = []
        caches = [] if keep_caches else None
        cur = x
        for layer in self.layers:
            inp = (cur, outputs[layer.source]) if isinstance(layer, Add) else cur
            cur, cache = layer.forward(inp, training=training)
            if CHECK_FINITE and not np.all(np.isfinite(cur)):
                raise FloatingPointError(f"non-finite output from {layer!r}")
            outputs.append(cur)
            if keep_caches:
                caches.append(cache)
        if keep_caches:
            return cur, caches, outputs
        return cur

    def predict(self, x, batch_size=256):
        """Inference forward in batches; returns the stacked outputs."""
        x = self._check_input(x)
        pieces = []
        for start in range(0, x.shape[0], batch_size):
            pieces.append(self.forward(x[start:start + batch_size], training=False))
        return np.concatenate(pieces, axis=0) if pieces else np.empty(
            (0, *self.output_shape)
        )

    def backward(self, dy, caches):
        """Propagate dy through the cached forward; returns (dx, grads).

        ``grads`` is a flat list aligned with ``params()``.  Skip edges
        accumulate: a layer output feeding both the main chain and an
        Add merge receives the sum of both gradient paths.
        """
        n = len(self.layers)
        pending = [None] * n
        pending[n - 1] = np.asarray(dy, dtype=np.float64)
        grads_per_layer = [None] * n
        dx_input = None

        def _accumulate(idx, grad):
            nonlocal dx_input
            if idx < 0:
                dx_input = grad if dx_input is None else dx_input + grad
            elif pending[idx] is None:
                pending[idx] = grad
            else:
                pending[idx] = pending[idx] + grad

        for i in range(n - 1, -1, -1):
            g = pending[i]
            layer = self.layers[i]
            if g is None:
                raise RuntimeError(f"no gradient reached layer {i} ({layer!r})")
            dx, param_grads = layer.backward(g, caches[i])
            grads_per_layer[i] = param_grads
            if isinstance(layer, Add):
                dmain, dskip = dx
                _accumulate(i - 1, dmain)
                _accumulate(layer.source, dskip)
            else:
                _accumulate(i - 1, dx)
        flat = []
        for pg in grads_per_layer:
            flat.extend(pg)
        return dx_input, flat


def mse_loss(pred, target):
    """Mean squared error over every element, plus its gradient in pred."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} vs target {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / diff.size) * diff
