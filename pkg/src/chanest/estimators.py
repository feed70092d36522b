"""Classical pilot-based channel estimators: LS and linear MMSE.

LS divides received pilots by the known pilot symbols and expands to the
full grid by bilinear interpolation.  MMSE filters the pilot-domain LS
estimate through empirically measured channel correlation matrices (one
pair per pilot symbol slot, since the two pilot symbols sample different
subcarriers), producing all subcarriers at the pilot symbols, then
interpolates linearly in time with the same clamped edge policy as LS.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ShapeError
from .grids import bilinear_full_grid, time_interp_matrix

__all__ = [
    "EstimateResult",
    "ChannelStats",
    "ls_pilots",
    "ls_full",
    "estimate_stats",
    "mmse_pilot_symbols",
    "mmse_estimate",
    "mse_db",
    "MSE_DB_FLOOR",
]

MSE_DB_FLOOR = -100.0


@dataclass(frozen=True)
class EstimateResult:
    """Full-grid estimate plus the pilot-domain values it came from."""

    h_hat: np.ndarray
    method: str
    aux: np.ndarray | None = None


@dataclass(frozen=True)
class ChannelStats:
    """Empirical channel correlation matrices, one pair per pilot symbol slot.

    ``r_hhp[s]`` is the (n_rows, n_pf) cross-correlation E{h h_p^H} between
    the full-band response and the pilot-subcarrier response at pilot
    symbol slot ``s``; ``r_hphp[s]`` is the (n_pf, n_pf) pilot
    autocorrelation, Hermitian-symmetrized.
    """

    r_hhp: np.ndarray
    r_hphp: np.ndarray
    source: dict

    def __post_init__(self):
        if self.r_hhp.ndim != 3 or self.r_hphp.ndim != 3:
            raise ShapeError("correlation stacks must have one matrix per pilot symbol")
        if self.r_hhp.shape[0] != self.r_hphp.shape[0]:
            raise ShapeError("r_hhp and r_hphp disagree on pilot symbol count")
        if self.r_hphp.shape[1] != self.r_hphp.shape[2]:
            raise ShapeError("r_hphp matrices must be square")

    @property
    def n_ps(self):
        return self.r_hhp.shape[0]


def ls_pilots(y_p, x_p):
    """Per-pilot least-squares estimate: received over transmitted."""
    y_p = np.asarray(y_p, dtype=np.complex128)
    x_p = np.asarray(x_p, dtype=np.complex128)
    if y_p.shape != x_p.shape:
        raise ShapeError(f"pilot grids differ: {y_p.shape} vs {x_p.shape}")
    if np.any(x_p == 0):
        raise ZeroDivisionError("pilot symbol with zero amplitude")
    return y_p / x_p


def ls_full(h_ls_p, pattern, dims, freq_edge="extrapolate"):
    """Bilinear expansion of the pilot-domain LS estimate to the full grid."""
    full = bilinear_full_grid(h_ls_p, pattern, dims, freq_edge=freq_edge)
    return EstimateResult(full, "ls", np.asarray(h_ls_p, dtype=np.complex128))


def estimate_stats(realizations, pattern, source=None):
    """Sample-mean correlation matrices from noise-free realizations.

    ``realizations`` is any iterable of ChannelRealization or bare
    complex grids.  For each pilot symbol slot the full-band column h
    and its pilot subsampling h_p are accumulated as outer products;
    r_hphp is Hermitian-symmetrized.  At least one realization is
    required; accuracy scales as 1/sqrt(N).
    """
    r_hhp = None
    r_hphp = None
    count = 0
    for real in realizations:
        h = getattr(real, "h_grid", real)
        if r_hhp is None:
            n_rows = h.shape[0]
            r_hhp = np.zeros((pattern.n_ps, n_rows, pattern.n_pf), dtype=np.complex128)
            r_hphp = np.zeros((pattern.n_ps, pattern.n_pf, pattern.n_pf), dtype=np.complex128)
        for s, sym in enumerate(pattern.pilot_symbols):
            col = h[:, sym - 1]
            col_p = col[pattern.subcarriers(s) - 1]
            r_hhp[s] += np.outer(col, col_p.conj())
            r_hphp[s] += np.outer(col_p, col_p.conj())
        count += 1
    if count == 0:
        raise ValueError("estimate_stats needs at least one realization")
    r_hhp /= count
    r_hphp /= count
    r_hphp = 0.5 * (r_hphp + r_hphp.conj().transpose(0, 2, 1))
    meta = dict(source or {})
    meta["n_samples"] = count
    return ChannelStats(r_hhp, r_hphp, meta)


def mmse_pilot_symbols(h_ls_p, stats, noise_var, signal_power=1.0):
    """MMSE-filter each pilot symbol column to all subcarriers.

    Solves (R_hphp + (noise_var/signal_power) I) z = h_ls_p per slot via
    a Hermitian factorization and returns R_hhp @ z, shape
    (n_rows, n_ps).  With noise_var == 0 a pseudo-solve with relative
    threshold 1e-10 handles rank-deficient statistics.
    """
    h_ls_p = np.asarray(h_ls_p, dtype=np.complex128)
    if noise_var < 0:
        raise ValueError("noise_var must be non-negative")
    if h_ls_p.shape != (stats.r_hphp.shape[1], stats.n_ps):
        raise ShapeError(
            f"pilot estimate shape {h_ls_p.shape} does not match stats "
            f"({stats.r_hphp.shape[1]}, {stats.n_ps})"
        )
    ratio = noise_var / signal_power
    n_rows = stats.r_hhp.shape[1]
    out = np.empty((n_rows, stats.n_ps), dtype=np.complex128)
    eye = np.eye(stats.r_hphp.shape[1])
    for s in range(stats.n_ps):
        a = stats.r_hphp[s] + ratio * eye
        if ratio > 0:
            z = linalg.solve(a, h_ls_p[:, s], assume_a="pos")
        else:
            z = np.linalg.lstsq(a, h_ls_p[:, s], rcond=1e-10)[0]
        out[:, s] = stats.r_hhp[s] @ z
    return out


def mmse_estimate(h_ls_p, stats, noise_var, signal_power, pattern, dims):
    """Linear MMSE estimate over the full grid.

    Pilot-symbol columns come from :func:`mmse_pilot_symbols`; the time
    axis is then linearly interpolated between pilot symbols with
    clamped edges, mirroring the LS expansion for a fair comparison.
    """
    n_rows, n_cols = dims
    cols = mmse_pilot_symbols(h_ls_p, stats, noise_var, signal_power)
    if cols.shape[0] != n_rows:
        raise ShapeError(f"stats cover {cols.shape[0]} subcarriers, frame has {n_rows}")
    t = time_interp_matrix(n_cols, pattern.pilot_symbols, edge="clamp")
    return EstimateResult(cols @ t.T, "mmse", np.asarray(h_ls_p, dtype=np.complex128))


def mse_db(h_hat, h):
    """Mean squared error between two grids, in dB (floored at -100)."""
    h_hat = np.asarray(h_hat)
    h = np.asarray(h)
    if h_hat.shape != h.shape:
        raise ShapeError(f"shape mismatch: {h_hat.shape} vs {h.shape}")
    mse = np.mean(np.abs(h_hat - h) ** 2)
    if mse <= 10.0 ** (MSE_DB_FLOOR / 10.0):
        return MSE_DB_FLOOR
    return float(10.0 * np.log10(mse))
