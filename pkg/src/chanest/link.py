"""Frame construction: QPSK payload, pilot placement, channel application.

The default pilot layout reserves OFDM symbols 1 and 13 (1-based) for
pilots; symbol 1 carries pilots on subcarriers 1, 4, ..., 70 and symbol
13 on subcarriers 2, 5, ..., 71 (step 3), for 48 pilots on the 72x14
grid.  Pilot values are unit-modulus QPSK so the LS inverse is a pure
rotation.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import NO_NOISE, add_awgn
from .errors import ConfigError, ShapeError
from .grids import hadamard
from .seeding import DOMAIN_FRAME, derived_rng


class GridIndex(NamedTuple):
    """1-based (subcarrier, symbol) address of one resource element."""

    subcarrier: int
    symbol: int


@dataclass(frozen=True)
class PilotPattern:
    """Pilot resource-element layout.

    ``start_offsets[s]`` is the 1-based subcarrier of the first pilot in
    pilot symbol slot ``s``; subsequent pilots follow every ``step``
    subcarriers, ``n_pf`` per pilot symbol.
    """

    pilot_symbols: tuple
    start_offsets: tuple
    step: int
    n_pf: int
    grid_shape: tuple

    def __post_init__(self):
        if len(self.start_offsets) != len(self.pilot_symbols):
            raise ConfigError("one start offset required per pilot symbol")
        n_rows, n_cols = self.grid_shape
        for sym in self.pilot_symbols:
            if not 1 <= sym <= n_cols:
                raise ConfigError(f"pilot symbol {sym} outside 1..{n_cols}")
        for s in range(self.n_ps):
            ks = self.subcarriers(s)
            if ks[0] < 1 or ks[-1] > n_rows:
                raise ConfigError(
                    f"pilot subcarriers {ks[0]}..{ks[-1]} exceed grid rows {n_rows}"
                )
        if len(set(self.positions())) != self.n_pf * self.n_ps:
            raise ConfigError("pilot positions must be unique")

    @property
    def n_ps(self):
        return len(self.pilot_symbols)

    @property
    def n_pilots(self):
        return self.n_pf * self.n_ps

    def subcarriers(self, slot):
        """1-based pilot subcarriers of pilot symbol slot ``slot``, ascending."""
        start = self.start_offsets[slot]
        return np.arange(start, start + self.step * self.n_pf, self.step)

    def positions(self):
        """All pilot positions, ordered by slot then ascending subcarrier."""
        return [
            GridIndex(int(k), int(self.pilot_symbols[s]))
            for s in range(self.n_ps)
            for k in self.subcarriers(s)
        ]


def default_pilot_pattern(frame):
    """The 48-pilot layout for the 72x14 grid (subcarrier step 3)."""
    n_pf = (frame.n_subcarriers - 2) // 3 + 1
    return PilotPattern(
        pilot_symbols=(1, 13),
        start_offsets=(1, 2),
        step=3,
        n_pf=n_pf,
        grid_shape=frame.shape,
    )


@dataclass(frozen=True)
class Frame:
    """Transmitted grid plus the pilot values the receiver knows."""

    x: np.ndarray
    pilot_values: np.ndarray
    pattern: PilotPattern


_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)


def build_frame(frame, pattern, seed):
    """Fill every resource element with a seeded unit-power QPSK symbol."""
    rng = derived_rng(seed, DOMAIN_FRAME)
    idx = rng.integers(0, 4, size=frame.shape)
    x = _QPSK[idx]
    pilot_values = extract_pilots(x, pattern)
    return Frame(x, pilot_values, pattern)


def transmit(frame, channel, snr_db, seed):
    """Apply the channel element-wise and add AWGN: Y = H o X + W."""
    if channel.h_grid.shape != frame.x.shape:
        raise ShapeError(
            f"channel grid {channel.h_grid.shape} does not match frame {frame.x.shape}"
        )
    y = hadamard(channel.h_grid, frame.x)
    if snr_db == NO_NOISE:
        return y
    # Unit-power QPSK over a unit-power channel: signal power is 1.
    return add_awgn(y, snr_db, 1.0, seed)


def extract_pilots(y, pattern):
    """Gather pilot resource elements into an (n_pf, n_ps) grid."""
    y = np.asarray(y)
    n_rows, n_cols = pattern.grid_shape
    if y.shape != (n_rows, n_cols):
        raise ShapeError(f"grid shape {y.shape} does not match pattern {pattern.grid_shape}")
    out = np.empty((pattern.n_pf, pattern.n_ps), dtype=y.dtype)
    for s, sym in enumerate(pattern.pilot_symbols):
        out[:, s] = y[pattern.subcarriers(s) - 1, sym - 1]
    return out
