"""Release gate: eight end-to-end checks at desk scale, in order.

Each test prints one ``[PASS]``/``[FAIL] criterion N`` line (outside the
capture, so it shows in any log) and asserts the same condition.  The
heavy fixtures run the real desk-profile pipeline once per channel
model; total budget on one CPU core is about two hours, dominated by
criterion 6's twelve estimator trainings.
"""

import copy
import time
from statistics import median
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.special import j0

from chanest import cli, pipeline
from chanest.channel import (
    SPEED_OF_LIGHT,
    FrameSpec,
    doppler_from_speed,
    generate_realization,
    make_profile,
)
from chanest.config import default_config, write_config
from chanest.dataset import load_dataset
from chanest.enhancer import AeConfig, build_ae, flatten_grids
from chanest.estimators import estimate_stats, ls_full, ls_pilots, mmse_estimate
from chanest.link import (
    NO_NOISE,
    build_frame,
    default_pilot_pattern,
    extract_pilots,
    transmit,
)
from chanest.nn import load_weights
from chanest.seeding import DOMAIN_INIT, derived_rng
from chanest.zoo import build_model, parse_zoo_id

from conftest import tiny_config
from helpers import fd_worst, layer_kind_cases

FRAME = FrameSpec()
PATTERN = default_pilot_pattern(FRAME)
EPA = make_profile("EPA")

GRAD_TOL = 1e-4
NONINF_MARGIN_DB = 0.2

EXACT_COUNTS = {
    "srcnn": 14_114,
    "srcnn-enhanced": 19_298,
    "reesnet": 52_466,
    "reesnet-enhanced": 52_610,
    "reesnet-12f": 29_654,
    "reesnet-12f-enhanced": 29_762,
}
# Published totals we can only approach: both architectures leave a few
# layer hyperparameters open, so the builds land within a tolerance and
# the deviation is reported rather than hidden.
NEAR_COUNTS = {
    "channelnet": (685_219, 0.01),
    "interp-resnet": (29_250, 0.02),
}


def _verdict(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}",
              flush=True)
    assert ok, f"criterion {num}: {detail}"


def _link_frame(snr_db, seed, doppler=50.0, pdp=EPA):
    """One frame through the link: (realization, pilot LS estimate)."""
    chan = generate_realization(pdp, doppler, FRAME, seed=seed)
    frame = build_frame(FRAME, PATTERN, seed=seed)
    y = transmit(frame, chan, snr_db, seed=seed)
    h_ls = ls_pilots(extract_pilots(y, PATTERN), frame.pilot_values)
    return chan, h_ls


@pytest.fixture(scope="module")
def epa_run(tmp_path_factory):
    """Desk-profile EPA run: datasets, both autoencoders, enhanced sets."""
    out = tmp_path_factory.mktemp("accept-epa")
    cfg = default_config("desk")
    cfg.out_dir = str(out)
    cfg.snr_test = (15.0, 20.0)
    cfg.validate()
    t0 = time.perf_counter()
    pipeline.generate(cfg)
    for mode in ("pilot", "full"):
        pipeline.train_ae(cfg, mode)
        pipeline.enhance(cfg, mode)
    minutes = (time.perf_counter() - t0) / 60
    return SimpleNamespace(cfg=cfg, paths=pipeline.run_paths(cfg),
                           minutes=minutes)


@pytest.fixture(scope="module")
def eva_run(tmp_path_factory):
    """Desk-profile EVA run with one baseline training per sweep model."""
    out = tmp_path_factory.mktemp("accept-eva")
    cfg = default_config("desk")
    cfg.out_dir = str(out)
    cfg.channel = "EVA"
    cfg.snr_test = (15.0,)
    cfg.validate()
    t0 = time.perf_counter()
    pipeline.generate(cfg)
    for mid in ("srcnn", "reesnet"):
        pipeline.train_estimator(cfg, mid)
    minutes = (time.perf_counter() - t0) / 60
    return SimpleNamespace(cfg=cfg, minutes=minutes)


def test_criterion_1_parameter_counts(capsys):
    t0 = time.perf_counter()
    bad = []
    for name, want in EXACT_COUNTS.items():
        got = build_model(parse_zoo_id(name)).param_count()
        if got != want:
            bad.append(f"{name} {got}!={want}")
    devs = []
    for name, (published, tol) in NEAR_COUNTS.items():
        got = build_model(parse_zoo_id(name)).param_count()
        dev = (got - published) / published
        devs.append(f"{name} {got} vs {published} ({dev:+.2%})")
        if abs(dev) > tol:
            bad.append(f"{name} off by {dev:+.2%} (tol {tol:.0%})")
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1.0
    detail = (f"6 exact counts match; {'; '.join(devs)}; {dt:.2f} s"
              if ok else "; ".join(bad) or f"too slow: {dt:.2f} s")
    _verdict(capsys, 1, ok, detail)


def test_criterion_2_gradient_checks(capsys):
    t0 = time.perf_counter()
    worst = {}
    for kind, (model, in_shape) in sorted(layer_kind_cases().items()):
        rng = np.random.default_rng(1234)
        model.initialize(rng)
        x = rng.normal(size=in_shape)
        worst[kind] = fd_worst(model, x, n_probes=50, rng=rng)
    dt = time.perf_counter() - t0
    peak = max(worst, key=worst.get)
    ok = max(worst.values()) < GRAD_TOL and dt < 60
    _verdict(capsys, 2, ok,
             f"{len(worst)} layer kinds, 50 probes each, worst rel err "
             f"{worst[peak]:.2e} ({peak}); {dt:.1f} s")


def test_criterion_3_classical_oracles(capsys):
    t0 = time.perf_counter()
    parts, ok = [], True

    chan, h_ls = _link_frame(NO_NOISE, seed=7)
    err = np.max(np.abs(h_ls - extract_pilots(chan.h_grid, PATTERN)))
    ok &= err < 1e-12
    parts.append(f"noiseless LS max err {err:.1e}")

    snr_db, acc, n = 10.0, 0.0, 0
    for seed in range(2100):
        chan, h_ls = _link_frame(snr_db, seed=seed)
        acc += np.sum(np.abs(h_ls - extract_pilots(chan.h_grid, PATTERN)) ** 2)
        n += h_ls.size
    rel = abs(acc / n - 10 ** (-snr_db / 10)) / 10 ** (-snr_db / 10)
    ok &= rel < 0.05 and n >= 100_000
    parts.append(f"pilot MSE vs sigma^2 off {rel:.1%} at {n} REs")

    stats = estimate_stats(
        (generate_realization(EPA, 50.0, FRAME, seed=50_000 + i)
         for i in range(2000)),
        PATTERN,
    )
    snr_db = 5.0
    noise_var = 10 ** (-snr_db / 10)
    mse = {"ls": 0.0, "mmse": 0.0}
    for seed in range(2000):
        chan, h_ls = _link_frame(snr_db, seed=60_000 + seed)
        h = chan.h_grid
        mse["ls"] += np.mean(np.abs(ls_full(h_ls, PATTERN, FRAME.shape).h_hat - h) ** 2)
        full = mmse_estimate(h_ls, stats, noise_var, 1.0, PATTERN, FRAME.shape)
        mse["mmse"] += np.mean(np.abs(full.h_hat - h) ** 2)
    ok &= mse["mmse"] < mse["ls"]
    parts.append(
        f"5 dB EPA over 2000 paired frames mmse {10 * np.log10(mse['mmse'] / 2000):.2f} "
        f"< ls {10 * np.log10(mse['ls'] / 2000):.2f} dB")

    snrs = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    curves = {"ls": [], "mmse": []}
    for snr in snrs:
        nv = 10 ** (-snr / 10)
        acc = {"ls": 0.0, "mmse": 0.0}
        for seed in range(400):
            chan, h_ls = _link_frame(snr, seed=70_000 + seed)
            h = chan.h_grid
            acc["ls"] += np.mean(np.abs(ls_full(h_ls, PATTERN, FRAME.shape).h_hat - h) ** 2)
            acc["mmse"] += np.mean(
                np.abs(mmse_estimate(h_ls, stats, nv, 1.0, PATTERN, FRAME.shape).h_hat - h) ** 2)
        for k in curves:
            curves[k].append(acc[k])
    mono = all(np.all(np.diff(curves[k]) < 0) for k in curves)
    ok &= mono
    parts.append(f"LS/MMSE monotone over {snrs[0]:g}-{snrs[-1]:g} dB: {mono}")

    dt = time.perf_counter() - t0
    ok &= dt < 300
    _verdict(capsys, 3, ok, "; ".join(parts) + f"; {dt:.0f} s")


def test_criterion_4_channel_statistics(capsys):
    t0 = time.perf_counter()
    fd = 97.0
    n = 10_000
    power = 0.0
    num = np.zeros(5)
    den = 0.0
    for i in range(n):
        h = generate_realization(EPA, fd, FRAME, seed=80_000 + i).h_grid
        power += np.mean(np.abs(h) ** 2)
        row = h[36]
        for lag in range(5):
            num[lag] += np.vdot(row[:14 - lag], row[lag:]).real / (14 - lag)
        den += np.vdot(row, row).real / 14
    power /= n
    rho = num / den
    theory = j0(2 * np.pi * fd * FRAME.symbol_duration * np.arange(5))
    j0_dev = float(np.max(np.abs(rho - theory)))

    dop_dev = 0.0
    endpoints = []
    for speed in (50.0, 160.0):
        exact = (speed / 3.6) * FRAME.carrier_freq / SPEED_OF_LIGHT
        got = doppler_from_speed(speed, FRAME.carrier_freq)
        dop_dev = max(dop_dev, abs(got - exact))
        endpoints.append(f"{speed:g} km/h -> {got:.2f} Hz")

    dt = time.perf_counter() - t0
    ok = abs(power - 1.0) < 0.05 and j0_dev < 0.1 and dop_dev < 0.5 and dt < 300
    _verdict(capsys, 4, ok,
             f"E|H|^2 = {power:.4f}; worst J0 gap {j0_dev:.3f} (lags<=4 at "
             f"{fd:g} Hz, {n} draws); {'; '.join(endpoints)}; {dt:.0f} s")


def test_criterion_5_enhancement_contract(capsys, epa_run):
    t0 = time.perf_counter()
    cfg, paths = epa_run.cfg, epa_run.paths
    parts, ok = [], True

    dims = {"pilot": (24, 2, 3), "full": (72, 14, 3)}
    for mode, want in dims.items():
        enh = load_dataset(paths.test_set(mode, 3, 15.0))
        base = load_dataset(paths.test_set(mode, 2, 15.0))
        ok &= enh.input_dims == want
        ok &= np.array_equal(enh.inputs[..., :2], base.inputs)
        ok &= bool(np.all(enh.inputs[..., 2] >= 0.0))
    parts.append("dims 24x2x3 / 72x14x3, channels 0-1 bit-equal, "
                 "feature plane >= 0")

    held_out = load_dataset(paths.test_set("pilot", 2, 15.0)).inputs[:500]
    flat = flatten_grids(held_out)
    trained = build_ae(AeConfig(24, 2))
    load_weights(trained, paths.ae_weights("pilot"))
    fresh = build_ae(AeConfig(24, 2))
    fresh.initialize(derived_rng(cfg.master_seed, DOMAIN_INIT, 999))
    mse_t = float(np.mean((trained.predict(flat) - flat) ** 2))
    mse_f = float(np.mean((fresh.predict(flat) - flat) ** 2))
    ok &= mse_t < mse_f
    parts.append(f"held-out recon {mse_t:.4f} (trained) < {mse_f:.4f} "
                 f"(untrained), {flat.shape[0]} paired samples")

    minutes = epa_run.minutes + (time.perf_counter() - t0) / 60
    ok &= minutes < 15
    _verdict(capsys, 5, ok, "; ".join(parts) + f"; {minutes:.1f} min incl. data+AE")


def test_criterion_6_desk_noninferiority(capsys, epa_run):
    t0 = time.perf_counter()
    seeds = (0, 1, 2)
    ids = ["srcnn", "srcnn-enhanced", "reesnet", "reesnet-enhanced"]
    scores = {}
    for k in seeds:
        cfg_k = copy.deepcopy(epa_run.cfg)
        cfg_k.master_seed = epa_run.cfg.master_seed + 1000 + k
        for mid in ids:
            pipeline.train_estimator(cfg_k, mid, tag=f"s{k}")
        _, rows = pipeline.eval_snr(cfg_k, ids, weight_tag=f"s{k}",
                                    csv_name=f"mse-vs-snr-s{k}.csv",
                                    with_chart=False)
        for snr, name, db, _n in rows:
            scores[(name, snr, k)] = db

    parts, ok = [], True
    for mid in ("srcnn", "reesnet"):
        for snr in (15.0, 20.0):
            base = [scores[(mid, snr, k)] for k in seeds]
            enh = [scores[(f"{mid}-enhanced", snr, k)] for k in seeds]
            delta = median(e - b for e, b in zip(enh, base))
            good = median(enh) <= median(base) + NONINF_MARGIN_DB
            ok &= good
            parts.append(f"{mid}@{snr:g}dB {median(base):.2f}->"
                         f"{median(enh):.2f} (med delta {delta:+.2f})")

    minutes = epa_run.minutes + (time.perf_counter() - t0) / 60
    ok &= minutes < 120
    _verdict(capsys, 6, ok,
             "median enhanced vs baseline dB: " + "; ".join(parts)
             + f"; {minutes:.0f} min")


def test_criterion_7_doppler_sweep_shape(capsys, eva_run):
    t0 = time.perf_counter()
    _, rows = pipeline.eval_doppler(eva_run.cfg, ["srcnn", "reesnet"],
                                    with_chart=False)
    speeds = sorted({s for _fd, s, _m, _v, _n in rows})
    by_model = {}
    for _fd, speed, name, db, _n in rows:
        by_model.setdefault(name, {})[speed] = db
    parts, ok = [f"{len(speeds)} speed points"], len(speeds) == 9
    for name, curve in by_model.items():
        rise = curve[160.0] - curve[0.0]
        ok &= rise > 0
        parts.append(f"{name} +{rise:.2f} dB at 311 Hz")
    minutes = eva_run.minutes + (time.perf_counter() - t0) / 60
    ok &= minutes < 30
    _verdict(capsys, 7, ok, "; ".join(parts) + f"; {minutes:.0f} min")


def test_criterion_8_cli_determinism(capsys, tmp_path):
    t0 = time.perf_counter()
    ini = tmp_path / "run.ini"
    write_config(tiny_config(tmp_path / "unused"), ini)

    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        for argv in (
            ["generate", "--config", str(ini), "--out", str(out), "--workers", "1"],
            ["train-ae", "--mode", "pilot", "--config", str(ini), "--out", str(out),
             "--workers", "1"],
            ["eval-snr", "--config", str(ini), "--out", str(out), "--workers", "1"],
        ):
            assert cli.main(argv) == 0, f"chanest {argv[0]} failed"
        outputs.append({
            "mse_vs_snr.csv": (out / "results" / "mse_vs_snr.csv").read_bytes(),
            "ae-pilot-trace.csv": (out / "models" / "ae-pilot-trace.csv").read_bytes(),
        })

    same = [name for name in outputs[0] if outputs[0][name] == outputs[1][name]]
    ok = len(same) == len(outputs[0])
    dt = time.perf_counter() - t0
    _verdict(capsys, 8, ok,
             f"{len(same)}/{len(outputs[0])} CSVs byte-identical across two "
             f"seeded runs (--workers 1); {dt:.0f} s")
