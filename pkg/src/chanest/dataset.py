"""Binary dataset container for grid samples.

One file holds N samples of (input grid, target grid) float32 pairs
plus a per-sample condition record (SNR, Doppler, seed) and enough
frame metadata to sanity-check downstream consumers.  Layout, all
little-endian:

    magic   b"OFDS"
    u32     version (currently 1)
    u64     n_samples
    u32     rows, cols, channels           (input dims)
    u32     rows, cols, channels           (target dims)
    f64     carrier_hz, spacing_hz
    32 B    enhancement fingerprint (zeros when inputs are raw)
    record  n_samples x (f32 snr_db, f32 doppler_hz, u64 seed)
    f32     inputs  (n, rows, cols, channels), C order
    f32     targets (n, rows, cols, channels), C order
"""

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetFormatError

MAGIC = b"OFDS"
VERSION = 1

_RECORD_DTYPE = np.dtype([
    ("snr_db", "<f4"),
    ("doppler_hz", "<f4"),
    ("seed", "<u8"),
])


@dataclass
class Dataset:
    """In-memory view of one dataset file."""

    inputs: np.ndarray
    targets: np.ndarray
    snr_db: np.ndarray
    doppler_hz: np.ndarray
    seeds: np.ndarray
    carrier_hz: float = 2.1e9
    spacing_hz: float = 15e3
    fingerprint: str = ""
    source: str = field(default="", compare=False)

    def __post_init__(self):
        self.inputs = np.ascontiguousarray(self.inputs, dtype=np.float32)
        self.targets = np.ascontiguousarray(self.targets, dtype=np.float32)
        self.snr_db = np.ascontiguousarray(self.snr_db, dtype=np.float32)
        self.doppler_hz = np.ascontiguousarray(self.doppler_hz, dtype=np.float32)
        self.seeds = np.ascontiguousarray(self.seeds, dtype=np.uint64)
        n = self.inputs.shape[0]
        if self.inputs.ndim != 4 or self.targets.ndim != 4:
            raise DatasetFormatError(
                f"inputs/targets must be (n, rows, cols, channels), got "
                f"{self.inputs.shape} and {self.targets.shape}"
            )
        for name, arr in (("targets", self.targets), ("snr_db", self.snr_db),
                          ("doppler_hz", self.doppler_hz), ("seeds", self.seeds)):
            if arr.shape[0] != n:
                raise DatasetFormatError(
                    f"{name} has {arr.shape[0]} entries for {n} samples"
                )
        if self.fingerprint and len(self.fingerprint) != 64:
            raise DatasetFormatError("fingerprint must be a sha256 hex digest")

    @property
    def n_samples(self):
        return int(self.inputs.shape[0])

    @property
    def input_dims(self):
        return tuple(int(d) for d in self.inputs.shape[1:])

    @property
    def target_dims(self):
        return tuple(int(d) for d in self.targets.shape[1:])

    def subset(self, idx):
        """New Dataset restricted to the given sample indices."""
        return Dataset(
            self.inputs[idx], self.targets[idx], self.snr_db[idx],
            self.doppler_hz[idx], self.seeds[idx], self.carrier_hz,
            self.spacing_hz, self.fingerprint, self.source,
        )


def _header_bytes(ds):
    fp = bytes.fromhex(ds.fingerprint) if ds.fingerprint else b"\x00" * 32
    return b"".join([
        MAGIC,
        struct.pack("<I", VERSION),
        struct.pack("<Q", ds.n_samples),
        struct.pack("<3I", *ds.input_dims),
        struct.pack("<3I", *ds.target_dims),
        struct.pack("<2d", ds.carrier_hz, ds.spacing_hz),
        fp,
    ])


def dataset_to_bytes(ds):
    records = np.zeros(ds.n_samples, dtype=_RECORD_DTYPE)
    records["snr_db"] = ds.snr_db
    records["doppler_hz"] = ds.doppler_hz
    records["seed"] = ds.seeds
    return b"".join([
        _header_bytes(ds),
        records.tobytes(),
        ds.inputs.astype("<f4", copy=False).tobytes(),
        ds.targets.astype("<f4", copy=False).tobytes(),
    ])


def save_dataset(ds, path):
    """Write the dataset; returns the file's sha256 hex digest."""
    data = dataset_to_bytes(ds)
    with open(path, "wb") as fh:
        fh.write(data)
    return hashlib.sha256(data).hexdigest()


def load_dataset(path):
    """Read and validate a dataset file."""
    with open(path, "rb") as fh:
        data = fh.read()

    def need(offset, nbytes, what):
        if offset + nbytes > len(data):
            raise DatasetFormatError(
                f"{path}: truncated at offset {offset} reading {what}"
            )
        return data[offset:offset + nbytes]

    if need(0, 4, "magic") != MAGIC:
        raise DatasetFormatError(f"{path}: not a dataset file (bad magic)")
    (version,) = struct.unpack("<I", need(4, 4, "version"))
    if version != VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}")
    (n,) = struct.unpack("<Q", need(8, 8, "sample count"))
    in_dims = struct.unpack("<3I", need(16, 12, "input dims"))
    t_dims = struct.unpack("<3I", need(28, 12, "target dims"))
    carrier, spacing = struct.unpack("<2d", need(40, 16, "frame metadata"))
    fp_raw = need(56, 32, "fingerprint")
    fingerprint = "" if fp_raw == b"\x00" * 32 else fp_raw.hex()
    pos = 88

    records = np.frombuffer(
        need(pos, n * _RECORD_DTYPE.itemsize, "sample records"),
        dtype=_RECORD_DTYPE,
    )
    pos += n * _RECORD_DTYPE.itemsize
    n_in = n * int(np.prod(in_dims))
    inputs = np.frombuffer(need(pos, 4 * n_in, "inputs"), dtype="<f4")
    pos += 4 * n_in
    n_t = n * int(np.prod(t_dims))
    targets = np.frombuffer(need(pos, 4 * n_t, "targets"), dtype="<f4")
    pos += 4 * n_t
    if pos != len(data):
        raise DatasetFormatError(
            f"{path}: {len(data) - pos} trailing bytes at offset {pos}"
        )
    return Dataset(
        inputs.reshape(n, *in_dims),
        targets.reshape(n, *t_dims),
        records["snr_db"].copy(),
        records["doppler_hz"].copy(),
        records["seed"].copy(),
        carrier_hz=carrier,
        spacing_hz=spacing,
        fingerprint=fingerprint,
        source=str(path),
    )


def file_digest(path):
    """sha256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
