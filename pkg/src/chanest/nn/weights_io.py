"""Binary weight-file format.

Layout (all little-endian):

    magic   b"AEDN"
    u32     format version (currently 1)
    u32     input rank, then that many u32 input dims
    u32     number of layers
    per layer:
        u32  layer kind id
        u32  config count, then that many i64 config ints
        u32  array count, then per array: u32 ndim + u32 dims
    payload: every array in order as float32

Arrays cover trainable parameters plus persistent state (batch-norm
running averages), in layer order.  Loading refuses files whose
manifest does not match the target model, naming the first mismatch.
"""

import hashlib
import io
import struct

import numpy as np

from ..errors import WeightFormatError
from .layers import KIND_NAMES

MAGIC = b"AEDN"
VERSION = 1


def _layer_arrays(layer):
    return list(layer.params()) + list(layer.state_arrays())


def _write_u32(buf, *values):
    buf.write(struct.pack("<%dI" % len(values), *values))


def _write_i64(buf, *values):
    if values:
        buf.write(struct.pack("<%dq" % len(values), *values))


def weights_to_bytes(model):
    """Serialize a model's architecture manifest and weights."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    _write_u32(buf, VERSION)
    _write_u32(buf, len(model.input_shape), *model.input_shape)
    _write_u32(buf, len(model.layers))
    for layer in model.layers:
        cfg = layer.config_ints()
        arrays = _layer_arrays(layer)
        _write_u32(buf, layer.kind, len(cfg))
        _write_i64(buf, *cfg)
        _write_u32(buf, len(arrays))
        for a in arrays:
            _write_u32(buf, a.ndim, *a.shape)
    for layer in model.layers:
        for a in _layer_arrays(layer):
            buf.write(np.ascontiguousarray(a, dtype="<f4").tobytes())
    return buf.getvalue()


def save_weights(model, path):
    data = weights_to_bytes(model)
    with open(path, "wb") as fh:
        fh.write(data)
    return hashlib.sha256(data).hexdigest()


def weight_fingerprint(model):
    """Hex digest of the serialized weights; stable across processes."""
    return hashlib.sha256(weights_to_bytes(model)).hexdigest()


class _Reader:
    def __init__(self, data, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n):
        if self.pos + n > len(self.data):
            raise WeightFormatError(f"{self.path}: truncated weight file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, count=1):
        vals = struct.unpack("<%dI" % count, self.take(4 * count))
        return vals[0] if count == 1 else vals

    def i64(self, count):
        if count == 0:
            return ()
        return struct.unpack("<%dq" % count, self.take(8 * count))


def load_weights(model, path):
    """Fill ``model`` from a weight file, validating the manifest."""
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data, path)
    if r.take(4) != MAGIC:
        raise WeightFormatError(f"{path}: not a weight file (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise WeightFormatError(f"{path}: unsupported version {version}")
    rank = r.u32()
    in_shape = tuple(np.atleast_1d(r.u32(rank)) if rank else ())
    in_shape = tuple(int(d) for d in np.atleast_1d(in_shape)) if rank else ()
    if in_shape != model.input_shape:
        raise WeightFormatError(
            f"{path}: input shape {in_shape} does not match model "
            f"{model.input_shape}"
        )
    n_layers = r.u32()
    if n_layers != len(model.layers):
        raise WeightFormatError(
            f"{path}: {n_layers} layers in file, model has {len(model.layers)}"
        )
    shapes = []
    for i, layer in enumerate(model.layers):
        kind = r.u32()
        if kind != layer.kind:
            raise WeightFormatError(
                f"{path}: layer {i} is {KIND_NAMES.get(kind, kind)} in file, "
                f"model has {KIND_NAMES.get(layer.kind, layer.kind)}"
            )
        n_cfg = r.u32()
        cfg = r.i64(n_cfg)
        if list(cfg) != list(layer.config_ints()):
            raise WeightFormatError(
                f"{path}: layer {i} ({KIND_NAMES[layer.kind]}) config "
                f"{list(cfg)} does not match model {layer.config_ints()}"
            )
        arrays = _layer_arrays(layer)
        n_arrays = r.u32()
        if n_arrays != len(arrays):
            raise WeightFormatError(
                f"{path}: layer {i} has {n_arrays} arrays in file, "
                f"model expects {len(arrays)}"
            )
        layer_shapes = []
        for a in arrays:
            ndim = r.u32()
            dims = tuple(int(d) for d in np.atleast_1d(r.u32(ndim))) if ndim else ()
            if dims != a.shape:
                raise WeightFormatError(
                    f"{path}: layer {i} array shape {dims} does not match "
                    f"model {a.shape}"
                )
            layer_shapes.append(dims)
        shapes.append(layer_shapes)
    for i, layer in enumerate(model.layers):
        for a in _layer_arrays(layer):
            raw = np.frombuffer(r.take(4 * a.size), dtype="<f4")
            a[...] = raw.reshape(a.shape).astype(np.float64)
    if r.pos != len(data):
        raise WeightFormatError(f"{path}: {len(data) - r.pos} trailing bytes")
    return model
