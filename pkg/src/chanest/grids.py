"""Complex time-frequency grid arithmetic shared by all estimators.

A "grid" here is a 2-D complex ndarray indexed [subcarrier, symbol]
(rows = frequency axis, cols = time axis).  Real-valued "stacks" are 3-D
float arrays with a trailing channel axis: channel 0 holds the real part,
channel 1 the imaginary part, and an optional channel 2 a feature plane.
"""

import numpy as np

from .errors import ShapeError

__all__ = [
    "as_grid",
    "hadamard",
    "split_reim",
    "merge_reim",
    "amp_phase",
    "bilinear_full_grid",
    "freq_interp_matrix",
    "time_interp_matrix",
]


def as_grid(a):
    """Validate and return ``a`` as a finite 2-D complex128 grid."""
    g = np.asarray(a, dtype=np.complex128)
    if g.ndim != 2:
        raise ShapeError(f"grid must be 2-D, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("grid contains NaN or Inf")
    return g


def hadamard(a, b):
    """Element-wise complex product of two equally sized grids."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def split_reim(g):
    """Split a complex grid into a (rows, cols, 2) real/imag stack."""
    g = np.asarray(g)
    if g.ndim != 2:
        raise ShapeError(f"expected 2-D grid, got shape {g.shape}")
    return np.stack([g.real.astype(np.float64), g.imag.astype(np.float64)], axis=-1)


def merge_reim(s):
    """Exact inverse of :func:`split_reim` for 2-channel stacks."""
    s = np.asarray(s)
    if s.ndim != 3 or s.shape[-1] != 2:
        raise ShapeError(
            f"expected (rows, cols, 2) stack, got shape {s.shape}; "
            "3-channel enhanced stacks carry a feature plane and do not "
            "merge back to one complex grid"
        )
    return s[..., 0] + 1j * s[..., 1]


def amp_phase(g):
    """Amplitude and four-quadrant phase of a complex grid.

    Phase is in (-pi, pi]; the phase of an exact 0+0j entry is defined
    as 0 so downstream math never sees NaN.
    """
    g = as_grid(g)
    amp = np.abs(g)
    # atan2(0, 0) is already 0 in IEEE semantics, which is what we want.
    phase = np.arctan2(g.imag, g.real)
    return amp, phase


def freq_interp_matrix(n_rows, pilot_subcarriers, edge="extrapolate"):
    """Linear-interpolation operator from pilot subcarriers to all rows.

    Returns a dense (n_rows, n_pilots) matrix W such that ``W @ v``
    linearly interpolates pilot values ``v`` (at 1-based subcarrier
    indices ``pilot_subcarriers``) onto subcarriers 1..n_rows.  Rows
    outside the pilot span are linearly extrapolated from the nearest
    pilot pair, or clamped to the nearest pilot when ``edge="clamp"``.
    """
    ks = np.asarray(pilot_subcarriers, dtype=np.float64)
    if ks.size < 2:
        raise ShapeError("need at least 2 pilots along the frequency axis")
    if np.any(np.diff(ks) <= 0):
        raise ShapeError("pilot subcarriers must be strictly increasing")
    if edge not in ("extrapolate", "clamp"):
        raise ValueError(f"unknown edge policy {edge!r}")

    w = np.zeros((n_rows, ks.size))
    for row in range(1, n_rows + 1):
        if row <= ks[0]:
            lo, hi = 0, 1
        elif row >= ks[-1]:
            lo, hi = ks.size - 2, ks.size - 1
        else:
            hi = int(np.searchsorted(ks, row))
            lo = hi - 1
        t = (row - ks[lo]) / (ks[hi] - ks[lo])
        if edge == "clamp":
            t = min(max(t, 0.0), 1.0)
        w[row - 1, lo] = 1.0 - t
        w[row - 1, hi] = t
    return w


def time_interp_matrix(n_cols, pilot_symbols, edge="clamp"):
    """Linear-interpolation operator from pilot symbols to all columns.

    Same construction as :func:`freq_interp_matrix` but the default edge
    policy is clamped (nearest pilot symbol) outside the pilot span.
    """
    return freq_interp_matrix(n_cols, pilot_symbols, edge=edge)


def bilinear_full_grid(pilot_vals, pattern, out_dims, freq_edge="extrapolate"):
    """Expand a pilot-position grid to the full frame by bilinear interpolation.

    Per pilot symbol, pilot values are linearly interpolated along the
    subcarrier axis (with linear edge extrapolation by default, since the
    two pilot symbols start at subcarrier offsets 1 and 2 and neither
    covers both grid edges); then each subcarrier row is linearly
    interpolated along the symbol axis between the pilot symbols, clamped
    to the nearest pilot symbol outside their span.  The result is exact
    at every pilot position.

    Parameters
    ----------
    pilot_vals : complex array (n_pf, n_ps)
        Values at pilot positions, rows ordered by ascending subcarrier
        within each pilot symbol.
    pattern : PilotPattern
        Supplies ``pilot_symbols`` and per-symbol ``subcarriers(slot)``.
    out_dims : (n_rows, n_cols)
        Full frame dimensions.
    """
    vals = np.asarray(pilot_vals, dtype=np.complex128)
    n_rows, n_cols = out_dims
    if vals.shape != (pattern.n_pf, pattern.n_ps):
        raise ShapeError(
            f"pilot values shape {vals.shape} does not match pattern "
            f"({pattern.n_pf}, {pattern.n_ps})"
        )
    if pattern.n_ps < 2:
        raise ShapeError("need at least 2 pilot symbols along the time axis")

    # Frequency stage: one interpolation operator per pilot symbol.
    cols = np.empty((n_rows, pattern.n_ps), dtype=np.complex128)
    for s in range(pattern.n_ps):
        w = freq_interp_matrix(n_rows, pattern.subcarriers(s), edge=freq_edge)
        cols[:, s] = w @ vals[:, s]

    # Time stage: clamped linear interpolation between pilot symbols.
    t = time_interp_matrix(n_cols, pattern.pilot_symbols, edge="clamp")
    return cols @ t.T
