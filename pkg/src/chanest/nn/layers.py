"""Layer zoo for the reverse-mode engine.

All layers work on float64 arrays with a leading batch axis that is not
part of the declared shapes: dense layers see (B, features), spatial
layers see (B, H, W, C) channel-last.  Convolutions use the
cross-correlation convention (no kernel flip) with explicit per-side
padding.  ``backward`` consumes the cache returned by ``forward`` and
returns the input gradient plus one gradient per parameter array.
"""

import math

import numpy as np

from ..errors import ShapeError

KIND_DENSE = 1
KIND_CONV2D = 2
KIND_TCONV2D = 3
KIND_RELU = 4
KIND_BATCHNORM = 5
KIND_ADD = 6
KIND_UPSAMPLE = 7

KIND_NAMES = {
    KIND_DENSE: "FullyConnected",
    KIND_CONV2D: "Conv2D",
    KIND_TCONV2D: "TransposedConv2D",
    KIND_RELU: "ReLU",
    KIND_BATCHNORM: "BatchNorm",
    KIND_ADD: "Add",
    KIND_UPSAMPLE: "BilinearUpsample",
}

# Largest contiguous im2col-style buffer a convolution may materialize.
_WINDOW_COPY_LIMIT = 1024 * 2**20


def _pair(v):
    if isinstance(v, (tuple, list)):
        return (int(v[0]), int(v[1]))
    return (int(v), int(v))


def _he_uniform(rng, shape, fan_in):
    limit = math.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Common layer interface; subclasses fill in the math."""

    kind = 0

    def __init__(self):
        self.in_shape = None
        self.out_shape = None

    # -- structure ----------------------------------------------------
    def build(self, in_shape):
        """Validate ``in_shape`` (no batch axis) and set ``out_shape``."""
        raise NotImplementedError

    def init_params(self, rng):
        pass

    def params(self):
        return []

    def state_arrays(self):
        """Non-trainable arrays that still belong in a weight file."""
        return []

    def param_count(self):
        return sum(p.size for p in self.params())

    def macs(self):
        return 0

    def config_ints(self):
        """Kind-specific integers for the weight-file manifest."""
        return []

    # -- math ---------------------------------------------------------
    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, dy, cache):
        raise NotImplementedError

    def __repr__(self):
        return f"{KIND_NAMES.get(self.kind, '?')}({self.in_shape}->{self.out_shape})"


class Dense(Layer):
    kind = KIND_DENSE

    def __init__(self, in_features, out_features):
        super().__init__()
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        self.w = np.zeros((self.in_features, self.out_features))
        self.b = np.zeros(self.out_features)

    def build(self, in_shape):
        if in_shape != (self.in_features,):
            raise ShapeError(
                f"FullyConnected expects ({self.in_features},), got {in_shape}"
            )
        self.in_shape = in_shape
        self.out_shape = (self.out_features,)
        return self.out_shape

    def init_params(self, rng):
        self.w = _he_uniform(rng, self.w.shape, self.in_features)
        self.b = np.zeros(self.out_features)

    def params(self):
        return [self.w, self.b]

    def macs(self):
        return 2 * self.in_features * self.out_features

    def config_ints(self):
        return [self.in_features, self.out_features]

    def forward(self, x, training=False):
        return x @ self.w + self.b, x

    def backward(self, dy, cache):
        x = cache
        dw = x.T @ dy
        db = dy.sum(axis=0)
        return dy @ self.w.T, [dw, db]


class ReLU(Layer):
    kind = KIND_RELU

    def build(self, in_shape):
        self.in_shape = in_shape
        self.out_shape = in_shape
        return in_shape

    def forward(self, x, training=False):
        mask = x > 0
        return x * mask, mask

    def backward(self, dy, cache):
        return dy * cache, []


def _resolve_padding(padding, kernel):
    """Return per-side padding ((top, bottom), (left, right)).

    "same" resolves to kernel-1 total padding with the extra sample (for
    even kernels) on the bottom/right.
    """
    kh, kw = kernel
    if padding == "same":
        pt = (kh - 1) // 2
        pl = (kw - 1) // 2
        return (pt, kh - 1 - pt), (pl, kw - 1 - pl)
    if isinstance(padding, (tuple, list)) and len(padding) == 4:
        pt, pb, pl, pr = (int(p) for p in padding)
        return (pt, pb), (pl, pr)
    ph, pw = _pair(padding)
    return (ph, ph), (pw, pw)


class Conv2D(Layer):
    """Strided cross-correlation, weights (kh, kw, cin, cout)."""

    kind = KIND_CONV2D

    def __init__(self, in_channels, out_channels, kernel, stride=1, padding="same"):
        super().__init__()
        self.cin = int(in_channels)
        self.cout = int(out_channels)
        self.kernel = _pair(kernel)
        self.stride = _pair(stride)
        (self.pt, self.pb), (self.pl, self.pr) = _resolve_padding(padding, self.kernel)
        self.w = np.zeros((*self.kernel, self.cin, self.cout))
        self.b = np.zeros(self.cout)

    def build(self, in_shape):
        if len(in_shape) != 3 or in_shape[2] != self.cin:
            raise ShapeError(
                f"Conv2D expects (H, W, {self.cin}), got {in_shape}"
            )
        h, w = in_shape[:2]
        kh, kw = self.kernel
        sh, sw = self.stride
        oh = (h + self.pt + self.pb - kh) // sh + 1
        ow = (w + self.pl + self.pr - kw) // sw + 1
        if oh <= 0 or ow <= 0:
            raise ShapeError(f"Conv2D output collapses to {oh}x{ow} from {in_shape}")
        self.in_shape = in_shape
        self.out_shape = (oh, ow, self.cout)
        return self.out_shape

    def init_params(self, rng):
        kh, kw = self.kernel
        self.w = _he_uniform(rng, self.w.shape, kh * kw * self.cin)
        self.b = np.zeros(self.cout)

    def params(self):
        return [self.w, self.b]

    def macs(self):
        oh, ow, _ = self.out_shape
        kh, kw = self.kernel
        return 2 * oh * ow * kh * kw * self.cin * self.cout

    def config_ints(self):
        return [self.cin, self.cout, *self.kernel, *self.stride,
                self.pt, self.pb, self.pl, self.pr]

    def _pad(self, x):
        return np.pad(x, ((0, 0), (self.pt, self.pb), (self.pl, self.pr), (0, 0)))

    def _windows(self, xp):
        """Zero-copy sliding view (B, OH, OW, KH, KW, C) of the padded input."""
        kh, kw = self.kernel
        sh, sw = self.stride
        oh, ow, _ = self.out_shape
        sb, srow, scol, sc = xp.strides
        return np.lib.stride_tricks.as_strided(
            xp,
            shape=(xp.shape[0], oh, ow, kh, kw, self.cin),
            strides=(sb, srow * sh, scol * sw, srow, scol, sc),
            writeable=False,
        )

    def _use_windows(self, xp):
        # tensordot copies the strided view into a contiguous buffer that is
        # kh*kw times the padded input, so the fat-GEMM path only pays off
        # for skinny inputs, where the per-offset GEMMs would contract over
        # just a few channels; wider layers keep the per-offset GEMMs and
        # skip the copy.
        kh, kw = self.kernel
        return self.cin <= 4 and xp.nbytes * kh * kw <= _WINDOW_COPY_LIMIT

    def forward(self, x, training=False):
        xp = self._pad(x)
        if self._use_windows(xp):
            # One fat GEMM over all kernel positions at once: tensordot folds
            # the (KH, KW, C) window axes against the matching weight axes.
            out = np.tensordot(
                self._windows(xp), self.w, axes=([3, 4, 5], [0, 1, 2]))
        else:
            kh, kw = self.kernel
            sh, sw = self.stride
            oh, ow, _ = self.out_shape
            out = np.zeros((x.shape[0], oh, ow, self.cout))
            for ki in range(kh):
                for kj in range(kw):
                    rows = slice(ki, ki + (oh - 1) * sh + 1, sh)
                    cols = slice(kj, kj + (ow - 1) * sw + 1, sw)
                    out += xp[:, rows, cols, :] @ self.w[ki, kj]
        out += self.b
        return out, x

    def backward(self, dy, cache):
        x = cache
        kh, kw = self.kernel
        sh, sw = self.stride
        oh, ow, _ = self.out_shape
        xp = self._pad(x)
        if self._use_windows(xp):
            dw = np.tensordot(
                self._windows(xp), dy, axes=([0, 1, 2], [0, 1, 2]))
        else:
            dw = np.empty_like(self.w)
            dyf = dy.reshape(-1, self.cout)
            for ki in range(kh):
                for kj in range(kw):
                    rows = slice(ki, ki + (oh - 1) * sh + 1, sh)
                    cols = slice(kj, kj + (ow - 1) * sw + 1, sw)
                    patch = xp[:, rows, cols, :].reshape(-1, self.cin)
                    dw[ki, kj] = patch.T @ dyf
        dy2 = dy.reshape(-1, self.cout)
        dxp = np.zeros_like(xp)
        # Input gradient scatters one shifted GEMM per kernel position; the
        # strided windows overlap, so this cannot be a single tensordot.
        for ki in range(kh):
            for kj in range(kw):
                rows = slice(ki, ki + (oh - 1) * sh + 1, sh)
                cols = slice(kj, kj + (ow - 1) * sw + 1, sw)
                contrib = dy2 @ self.w[ki, kj].T
                dxp[:, rows, cols, :] += contrib.reshape(
                    dy.shape[0], oh, ow, self.cin)
        db = dy2.sum(axis=0)
        h, w = self.in_shape[:2]
        dx = dxp[:, self.pt:self.pt + h, self.pl:self.pl + w, :]
        return dx, [dw, db]


class TransposedConv2D(Layer):
    """Adjoint of a strided correlation; weights (kh, kw, cin, cout).

    Output spatial size is (in-1)*stride + kernel - 2*padding + output
    padding per axis, matching the usual deconvolution convention.
    """

    kind = KIND_TCONV2D

    def __init__(self, in_channels, out_channels, kernel, stride,
                 padding=0, output_padding=0):
        super().__init__()
        self.cin = int(in_channels)
        self.cout = int(out_channels)
        self.kernel = _pair(kernel)
        self.stride = _pair(stride)
        self.padding = _pair(padding)
        self.output_padding = _pair(output_padding)
        self.w = np.zeros((*self.kernel, self.cin, self.cout))
        self.b = np.zeros(self.cout)

    def build(self, in_shape):
        if len(in_shape) != 3 or in_shape[2] != self.cin:
            raise ShapeError(
                f"TransposedConv2D expects (H, W, {self.cin}), got {in_shape}"
            )
        h, w = in_shape[:2]
        (kh, kw), (sh, sw) = self.kernel, self.stride
        (ph, pw), (oph, opw) = self.padding, self.output_padding
        oh = (h - 1) * sh + kh - 2 * ph + oph
        ow = (w - 1) * sw + kw - 2 * pw + opw
        if oh <= 0 or ow <= 0:
            raise ShapeError(f"TransposedConv2D output collapses to {oh}x{ow}")
        self.in_shape = in_shape
        self.out_shape = (oh, ow, self.cout)
        return self.out_shape

    def init_params(self, rng):
        kh, kw = self.kernel
        self.w = _he_uniform(rng, self.w.shape, kh * kw * self.cin)
        self.b = np.zeros(self.cout)

    def params(self):
        return [self.w, self.b]

    def macs(self):
        oh, ow, _ = self.out_shape
        kh, kw = self.kernel
        return 2 * oh * ow * kh * kw * self.cin * self.cout

    def config_ints(self):
        return [self.cin, self.cout, *self.kernel, *self.stride,
                *self.padding, *self.output_padding]

    def forward(self, x, training=False):
        b = x.shape[0]
        h, w = self.in_shape[:2]
        (kh, kw), (sh, sw) = self.kernel, self.stride
        ph, pw = self.padding
        oh, ow, _ = self.out_shape
        # Scatter into a padded canvas, then crop the padding margins.
        canvas = np.zeros((b, oh + 2 * ph, ow + 2 * pw, self.cout))
        x2 = x.reshape(-1, self.cin)
        for ki in range(kh):
            for kj in range(kw):
                rows = slice(ki, ki + (h - 1) * sh + 1, sh)
                cols = slice(kj, kj + (w - 1) * sw + 1, sw)
                canvas[:, rows, cols, :] += (x2 @ self.w[ki, kj]).reshape(b, h, w, self.cout)
        out = canvas[:, ph:ph + oh, pw:pw + ow, :] + self.b
        return out, x

    def backward(self, dy, cache):
        x = cache
        b = x.shape[0]
        h, w = self.in_shape[:2]
        (kh, kw), (sh, sw) = self.kernel, self.stride
        ph, pw = self.padding
        oh, ow, _ = self.out_shape
        dyp = np.pad(dy, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
        x2 = x.reshape(-1, self.cin)
        dx = np.zeros_like(x)
        dx2 = dx.reshape(-1, self.cin)
        dw = np.empty_like(self.w)
        for ki in range(kh):
            for kj in range(kw):
                rows = slice(ki, ki + (h - 1) * sh + 1, sh)
                cols = slice(kj, kj + (w - 1) * sw + 1, sw)
                ds = dyp[:, rows, cols, :].reshape(-1, self.cout)
                dw[ki, kj] = x2.T @ ds
                dx2 += ds @ self.w[ki, kj].T
        db = dy.reshape(-1, self.cout).sum(axis=0)
        return dx, [dw, db]


class BatchNorm(Layer):
    """Per-channel normalization over the trailing axis.

    Training mode normalizes with batch statistics and updates running
    averages; inference mode uses the running averages.  Running stats
    are serialized with the weights but excluded from parameter counts.
    """

    kind = KIND_BATCHNORM

    def __init__(self, channels, momentum=0.1, eps=1e-5):
        super().__init__()
        self.channels = int(channels)
        self.momentum = float(momentum)
        self.eps = float(eps)
        self.gamma = np.ones(self.channels)
        self.beta = np.zeros(self.channels)
        self.moving_mean = np.zeros(self.channels)
        self.moving_var = np.ones(self.channels)

    def build(self, in_shape):
        if in_shape[-1] != self.channels:
            raise ShapeError(
                f"BatchNorm expects {self.channels} channels, got shape {in_shape}"
            )
        self.in_shape = in_shape
        self.out_shape = in_shape
        return in_shape

    def init_params(self, rng):
        self.gamma = np.ones(self.channels)
        self.beta = np.zeros(self.channels)
        self.moving_mean = np.zeros(self.channels)
        self.moving_var = np.ones(self.channels)

    def params(self):
        return [self.gamma, self.beta]

    def state_arrays(self):
        return [self.moving_mean, self.moving_var]

    def config_ints(self):
        return [self.channels]

    def forward(self, x, training=False):
        axes = tuple(range(x.ndim - 1))
        if training:
            mu = x.mean(axis=axes)
            var = x.var(axis=axes)
            n = x.size // self.channels
            self.moving_mean += self.momentum * (mu - self.moving_mean)
            unbiased = var * n / max(n - 1, 1)
            self.moving_var += self.momentum * (unbiased - self.moving_var)
        else:
            mu = self.moving_mean
            var = self.moving_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu) * inv_std
        return self.gamma * xhat + self.beta, (xhat, inv_std, training)

    def backward(self, dy, cache):
        xhat, inv_std, training = cache
        axes = tuple(range(dy.ndim - 1))
        dgamma = (dy * xhat).sum(axis=axes)
        dbeta = dy.sum(axis=axes)
        dxhat = dy * self.gamma
        if not training:
            return dxhat * inv_std, [dgamma, dbeta]
        n = dy.size // self.channels
        # Batch statistics make mean and variance functions of x.
        dx = (inv_std / n) * (
            n * dxhat
            - dxhat.sum(axis=axes)
            - xhat * (dxhat * xhat).sum(axis=axes)
        )
        return dx, [dgamma, dbeta]


class Add(Layer):
    """Merge point for a skip edge from an earlier layer's output.

    ``forward`` receives (x, skip).  With ``subtract=True`` the output is
    skip - x (residual noise removal); otherwise x + skip.
    """

    kind = KIND_ADD

    def __init__(self, source, subtract=False):
        super().__init__()
        self.source = int(source)
        self.subtract = bool(subtract)

    def build(self, in_shape):
        self.in_shape = in_shape
        self.out_shape = in_shape
        return in_shape

    def config_ints(self):
        return [self.source, int(self.subtract)]

    def forward(self, xs, training=False):
        x, skip = xs
        if x.shape != skip.shape:
            raise ShapeError(f"skip shape {skip.shape} does not match {x.shape}")
        return (skip - x if self.subtract else x + skip), None

    def backward(self, dy, cache):
        dx = -dy if self.subtract else dy
        return (dx, dy), []


class BilinearUpsample(Layer):
    """Fixed (parameter-free) bilinear resize to a target spatial size."""

    kind = KIND_UPSAMPLE

    def __init__(self, target):
        super().__init__()
        self.target = _pair(target)
        self._row_op = None
        self._col_op = None

    @staticmethod
    def _axis_matrix(n_out, n_in):
        # Align-corners linear weights; exact for linear ramps and at ends.
        m = np.zeros((n_out, n_in))
        if n_in == 1:
            m[:, 0] = 1.0
            return m
        for t in range(n_out):
            s = t * (n_in - 1) / (n_out - 1) if n_out > 1 else 0.0
            lo = min(int(math.floor(s)), n_in - 2)
            frac = s - lo
            m[t, lo] = 1.0 - frac
            m[t, lo + 1] = frac
        return m

    def build(self, in_shape):
        if len(in_shape) != 3:
            raise ShapeError(f"BilinearUpsample expects (H, W, C), got {in_shape}")
        h, w, c = in_shape
        th, tw = self.target
        self._row_op = self._axis_matrix(th, h)
        self._col_op = self._axis_matrix(tw, w)
        self.in_shape = in_shape
        self.out_shape = (th, tw, c)
        return self.out_shape

    def config_ints(self):
        return list(self.target)

    def forward(self, x, training=False):
        y = np.einsum("pi,biwc,qw->bpqc", self._row_op, x, self._col_op, optimize=True)
        return y, None

    def backward(self, dy, cache):
        dx = np.einsum("pi,bpqc,qw->biwc", self._row_op, dy, self._col_op, optimize=True)
        return dx, []
