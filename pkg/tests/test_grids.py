"""Grid utilities: re/im packing and interpolation operators."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.interpolate import interp1d

from chanest.errors import ShapeError
from chanest.grids import (
    amp_phase,
    as_grid,
    bilinear_full_grid,
    freq_interp_matrix,
    hadamard,
    merge_reim,
    split_reim,
    time_interp_matrix,
)
from chanest.link import default_pilot_pattern
from chanest.channel import FrameSpec


class TestReImPacking:
    def test_roundtrip(self):
        rng = np.random.default_rng(3)
        g = rng.normal(size=(7, 5)) + 1j * rng.normal(size=(7, 5))
        s = split_reim(g)
        assert s.shape == (7, 5, 2)
        assert s.dtype == np.float64
        assert_allclose(merge_reim(s), g, rtol=0, atol=0)

    def test_merge_rejects_extra_channels(self):
        with pytest.raises(ShapeError):
            merge_reim(np.zeros((4, 3, 3)))

    def test_amp_phase_zero_is_zero_phase(self):
        amp, ph = amp_phase(np.zeros((2, 2), dtype=complex))
        assert np.all(amp == 0) and np.all(ph == 0)

    def test_hadamard_shape_mismatch(self):
        with pytest.raises(ShapeError):
            hadamard(np.ones((2, 3), complex), np.ones((3, 2), complex))

    def test_as_grid_rejects_nan(self):
        bad = np.full((2, 2), np.nan + 0j)
        with pytest.raises(ValueError):
            as_grid(bad)


class TestInterpOperators:
    def test_freq_matrix_matches_scipy_extrapolation(self):
        rng = np.random.default_rng(11)
        pilots = np.arange(2, 70, 3)  # 1-based, edges uncovered on both sides
        vals = rng.normal(size=pilots.size)
        w = freq_interp_matrix(72, pilots, edge="extrapolate")
        oracle = interp1d(pilots.astype(float), vals, kind="linear",
                          fill_value="extrapolate")(np.arange(1, 73))
        assert_allclose(w @ vals, oracle, rtol=1e-12, atol=1e-12)

    def test_freq_matrix_clamp_holds_edges(self):
        pilots = np.array([10, 20, 30])
        w = freq_interp_matrix(40, pilots, edge="clamp")
        vals = np.array([1.0, 5.0, -2.0])
        out = w @ vals
        assert np.all(out[:9] == 1.0)
        assert np.all(out[30:] == -2.0)

    def test_affine_functions_reproduce_exactly(self):
        # Linear interpolation plus linear extrapolation is exact on
        # affine data, including beyond the pilot span.
        pilots = np.arange(1, 72, 3)
        w = freq_interp_matrix(72, pilots, edge="extrapolate")
        f = 0.7 * np.arange(1, 73) - 3.0
        assert_allclose(w @ f[pilots - 1], f, rtol=1e-12)

    def test_time_matrix_clamps_outside_pilot_symbols(self):
        t = time_interp_matrix(14, (1, 13), edge="clamp")
        vals = np.array([2.0, 8.0])
        out = t @ vals
        assert out[0] == 2.0
        assert out[13] == 8.0  # symbol 14 clamps to the last pilot symbol
        assert_allclose(out[6], 2.0 + 6.0 / 12.0 * 6.0)

    def test_bilinear_full_grid_matches_separable_oracle(self):
        rng = np.random.default_rng(5)
        frame = FrameSpec()
        pattern = default_pilot_pattern(frame)
        vals = rng.normal(size=(pattern.n_pf, pattern.n_ps)) \
            + 1j * rng.normal(size=(pattern.n_pf, pattern.n_ps))
        full = bilinear_full_grid(vals, pattern, frame.shape)
        assert full.shape == frame.shape
        # Oracle: frequency interpolation per pilot symbol, then time.
        cols = np.empty((frame.n_subcarriers, pattern.n_ps), dtype=complex)
        for s in range(pattern.n_ps):
            ks = pattern.subcarriers(s).astype(float)
            f = interp1d(ks, vals[:, s], kind="linear", fill_value="extrapolate")
            cols[:, s] = f(np.arange(1, frame.n_subcarriers + 1))
        syms = np.asarray(pattern.pilot_symbols, dtype=float)
        for n in range(frame.n_symbols):
            tt = min(max(n + 1.0, syms[0]), syms[-1])
            w1 = (syms[-1] - tt) / (syms[-1] - syms[0])
            expected = w1 * cols[:, 0] + (1 - w1) * cols[:, 1]
            assert_allclose(full[:, n], expected, rtol=1e-12, atol=1e-12)

    def test_pilot_rows_pass_through(self):
        frame = FrameSpec()
        pattern = default_pilot_pattern(frame)
        rng = np.random.default_rng(9)
        vals = rng.normal(size=(pattern.n_pf, pattern.n_ps)) + 0j
        full = bilinear_full_grid(vals, pattern, frame.shape)
        for s, sym in enumerate(pattern.pilot_symbols):
            got = full[pattern.subcarriers(s) - 1, sym - 1]
            assert_allclose(got, vals[:, s], rtol=1e-12, atol=1e-12)
