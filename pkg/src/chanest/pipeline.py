"""End-to-end workflow: simulate, train, enhance, evaluate, report.

Every function here is deterministic in (config, master seed): each
simulated sample owns a seed derived from (master, set id, SNR/speed
index, sample index), and that one seed drives the channel taps, the
transmitted symbols, the receiver noise, and the mobile-speed draw.
Because the per-sample seeds live in the dataset files, every model —
classical or neural, baseline or enhanced — is scored against the very
same channel realizations (paired comparison).
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import enhancer, zoo
from .channel import (
    NO_NOISE,
    doppler_from_speed,
    generate_realization,
    make_profile,
)
from .charts import line_chart
from .config import write_config
from .dataset import Dataset, file_digest, load_dataset, save_dataset
from .enhancer import AeConfig, build_ae
from .errors import ConfigError
from .estimators import (
    estimate_stats,
    ls_full,
    ls_pilots,
    mmse_estimate,
    mse_db,
)
from .grids import merge_reim, split_reim
from .link import build_frame, extract_pilots, transmit
from .manifest import new_manifest
from .nn import load_weights, save_weights, train, weight_fingerprint
from .seeding import DOMAIN_INIT, DOMAIN_SPEED, DOMAIN_TRAIN, derived_rng, derived_seed

# Seed-path tags for the four kinds of generated sets.
SET_TRAIN = 10
SET_TEST = 11
SET_STATS = 12
SET_DOPPLER = 13

CLASSICAL_MODELS = ("ls", "mmse")

_CHUNK = 100  # samples per worker task


@dataclass
class RunPaths:
    """Directory layout under one run's output root."""

    root: Path

    def __post_init__(self):
        self.root = Path(self.root)
        self.datasets = self.root / "datasets"
        self.models = self.root / "models"
        self.results = self.root / "results"
        self.manifests = self.root / "manifests"

    def ensure(self):
        for d in (self.root, self.datasets, self.models, self.results,
                  self.manifests):
            d.mkdir(parents=True, exist_ok=True)
        return self

    def train_set(self, mode, channels):
        return self.datasets / f"train-{mode}-{channels}ch.ofds"

    def test_set(self, mode, channels, snr_db):
        return self.datasets / f"test-{mode}-{channels}ch-snr{_num_tag(snr_db)}.ofds"

    def stats_set(self):
        return self.datasets / "stats-clean.ofds"

    def ae_weights(self, mode):
        return self.models / f"ae-{mode}.aedn"

    def model_weights(self, model_id, tag=""):
        suffix = f"-{tag}" if tag else ""
        return self.models / f"{model_id}{suffix}.aedn"

    def trace_csv(self, name):
        return self.models / f"{name}-trace.csv"


def run_paths(config):
    return RunPaths(config.out_dir).ensure()


def _recorded_paths(config):
    """run_paths plus a write-back of the resolved configuration."""
    paths = run_paths(config)
    write_config(config, paths.root / "config.resolved.ini")
    return paths


def _num_tag(value):
    return format(float(value), "g").replace(".", "p").replace("-", "m")


@dataclass(frozen=True)
class _SimContext:
    """Everything a worker needs to simulate samples; fully picklable."""

    channel: str
    frame: object
    pattern: object
    speed_range: tuple
    interp_edge: str
    master_seed: int

    @staticmethod
    def from_config(config):
        return _SimContext(
            channel=config.channel,
            frame=config.frame_spec(),
            pattern=config.pilot_pattern(),
            speed_range=tuple(config.speed_range),
            interp_edge=config.interp_edge,
            master_seed=config.master_seed,
        )


def _simulate_chunk(ctx, set_id, point_idx, snr_db, fixed_doppler, start, count,
                    noiseless=False):
    """Simulate ``count`` samples; returns per-field arrays.

    Inputs are LS pilot grids and their bilinear full-grid expansion
    (or, for noiseless stats sets, the clean channel at the pilot
    resource elements); targets are the true channel, split re/im.
    """
    pdp = make_profile(ctx.channel)
    frame = ctx.frame
    pattern = ctx.pattern
    n_pf, n_ps = pattern.n_pf, pattern.n_ps
    pilot_in = np.empty((count, n_pf, n_ps, 2), dtype=np.float32)
    full_in = np.empty((count, *frame.shape, 2), dtype=np.float32)
    targets = np.empty((count, *frame.shape, 2), dtype=np.float32)
    doppler = np.empty(count, dtype=np.float32)
    seeds = np.empty(count, dtype=np.uint64)
    for j in range(count):
        idx = start + j
        seed = derived_seed(ctx.master_seed, set_id, point_idx, idx)
        seeds[j] = seed
        if fixed_doppler is None:
            lo, hi = ctx.speed_range
            speed = derived_rng(seed, DOMAIN_SPEED).uniform(lo, hi)
            f_d = doppler_from_speed(speed, frame.carrier_freq)
        else:
            f_d = float(fixed_doppler)
        doppler[j] = f_d
        real = generate_realization(pdp, f_d, frame, seed)
        targets[j] = split_reim(real.h_grid)
        if noiseless:
            cols = np.stack(
                [real.h_grid[pattern.subcarriers(s) - 1, sym - 1]
                 for s, sym in enumerate(pattern.pilot_symbols)], axis=1)
            pilot_in[j] = split_reim(cols)
            full_in[j] = targets[j]
            continue
        fr = build_frame(frame, pattern, seed)
        y = transmit(fr, real, snr_db if snr_db is not None else NO_NOISE, seed)
        h_ls_p = ls_pilots(extract_pilots(y, pattern), fr.pilot_values)
        pilot_in[j] = split_reim(h_ls_p)
        full_in[j] = split_reim(
            ls_full(h_ls_p, pattern, frame.shape, freq_edge=ctx.interp_edge).h_hat
        )
    return pilot_in, full_in, targets, doppler, seeds


def _simulate_set(config, set_id, point_idx, snr_db, n_samples,
                  fixed_doppler=None, noiseless=False):
    """Simulate one set, optionally across worker processes."""
    ctx = _SimContext.from_config(config)
    chunks = [(s, min(_CHUNK, n_samples - s)) for s in range(0, n_samples, _CHUNK)]
    args = [(ctx, set_id, point_idx, snr_db, fixed_doppler, s, c, noiseless)
            for s, c in chunks]
    if config.workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_simulate_chunk_star, args))
    else:
        parts = [_simulate_chunk(*a) for a in args]
    pilot_in, full_in, targets, doppler, seeds = (
        np.concatenate([p[i] for p in parts]) for i in range(5)
    )
    snr = np.full(n_samples, math.inf if noiseless else float(snr_db),
                  dtype=np.float32)
    common = dict(carrier_hz=config.carrier_hz, spacing_hz=config.subcarrier_spacing_hz)
    return (
        Dataset(pilot_in, targets, snr, doppler, seeds, **common),
        Dataset(full_in, targets, snr, doppler, seeds, **common),
    )


def _simulate_chunk_star(args):
    return _simulate_chunk(*args)


# ---------------------------------------------------------------------------
# generate


def generate(config):
    """Write training, test, and statistics datasets for the run."""
    config.validate()
    paths = _recorded_paths(config)
    man = new_manifest("generate", config)

    # Training sets: all train-SNR points concatenated, point-major.
    pilot_parts, full_parts = [], []
    for k, snr in enumerate(config.snr_train):
        p, f = _simulate_set(config, SET_TRAIN, k, snr, config.samples_per_snr)
        pilot_parts.append(p)
        full_parts.append(f)
    for mode, parts in (("pilot", pilot_parts), ("full", full_parts)):
        ds = _concat_datasets(parts)
        path = paths.train_set(mode, 2)
        man.add_file(path, save_dataset(ds, path))

    # Test sets: one file per SNR point so evaluations stream per point.
    for k, snr in enumerate(config.snr_test):
        p, f = _simulate_set(config, SET_TEST, k, snr, config.samples_per_snr)
        for mode, ds in (("pilot", p), ("full", f)):
            path = paths.test_set(mode, 2, snr)
            man.add_file(path, save_dataset(ds, path))

    # Clean channel realizations for empirical correlation statistics.
    p, _ = _simulate_set(config, SET_STATS, 0, None, config.stats_samples,
                         noiseless=True)
    man.add_file(paths.stats_set(), save_dataset(p, paths.stats_set()))

    man.metrics["n_train"] = len(config.snr_train) * config.samples_per_snr
    man.metrics["n_test"] = len(config.snr_test) * config.samples_per_snr
    man.metrics["n_stats"] = config.stats_samples
    man.save(paths.manifests / "generate.json")
    return man


def _concat_datasets(parts):
    first = parts[0]
    return Dataset(
        np.concatenate([d.inputs for d in parts]),
        np.concatenate([d.targets for d in parts]),
        np.concatenate([d.snr_db for d in parts]),
        np.concatenate([d.doppler_hz for d in parts]),
        np.concatenate([d.seeds for d in parts]),
        first.carrier_hz, first.spacing_hz, first.fingerprint,
    )


def _require(path, hint):
    if not Path(path).exists():
        raise FileNotFoundError(f"{path} not found; run `chanest {hint}` first")
    return path


# ---------------------------------------------------------------------------
# autoencoder


def _ae_dims(config, mode):
    if mode == "pilot":
        pattern = config.pilot_pattern()
        return AeConfig(pattern.n_pf, pattern.n_ps)
    if mode == "full":
        return AeConfig(config.n_subcarriers, config.n_symbols)
    raise ConfigError(f"mode must be pilot or full, got {mode!r}")


_MODE_IDS = {"pilot": 0, "full": 1}


def train_ae(config, mode, train_seed=None):
    """Self-supervised autoencoder fit on the 2-channel training inputs."""
    config.validate()
    paths = _recorded_paths(config)
    ds = load_dataset(_require(paths.train_set(mode, 2), "generate"))
    ae_cfg = _ae_dims(config, mode)
    model = build_ae(ae_cfg)
    model.initialize(derived_rng(config.master_seed, DOMAIN_INIT, 100 + _MODE_IDS[mode]))
    if train_seed is None:
        train_seed = derived_seed(config.master_seed, DOMAIN_TRAIN, 100 + _MODE_IDS[mode])
    spec = config.train_spec("ae", seed=int(train_seed))
    result = enhancer.train_ae(model, ds.inputs, spec)

    man = new_manifest("train-ae", config)
    wpath = paths.ae_weights(mode)
    man.add_file(wpath, save_weights(model, wpath))
    man.ae_fingerprint = weight_fingerprint(model)
    tpath = paths.trace_csv(f"ae-{mode}")
    _write_trace(tpath, result)
    man.add_file(tpath, _text_digest(tpath))
    man.metrics = {
        "final_train_loss": result.final_train_loss,
        "best_epoch": result.best_epoch,
        "best_val_loss": result.best_val_loss,
    }
    man.save(paths.manifests / f"train-ae-{mode}.json")
    return wpath, result


def _load_ae(config, paths, mode):
    model = build_ae(_ae_dims(config, mode))
    load_weights(model, _require(paths.ae_weights(mode), f"train-ae --mode {mode}"))
    return model


def enhance(config, mode):
    """Write 3-channel twins of every 2-channel dataset of this mode."""
    config.validate()
    paths = _recorded_paths(config)
    model = _load_ae(config, paths, mode)
    fingerprint = weight_fingerprint(model)
    man = new_manifest("enhance", config)
    man.ae_fingerprint = fingerprint

    sources = [paths.train_set(mode, 2)]
    sources += [paths.test_set(mode, 2, snr) for snr in config.snr_test]
    for src in sources:
        ds = load_dataset(_require(src, "generate"))
        stacked = enhancer.enhance(
            model, ds.inputs,
            pre_relu=(config.ae_feature_tap == "pre_relu"),
            normalize=config.enhance_normalize,
        )
        out = Dataset(
            stacked, ds.targets, ds.snr_db, ds.doppler_hz, ds.seeds,
            ds.carrier_hz, ds.spacing_hz, fingerprint,
        )
        dst = Path(str(src).replace("-2ch", "-3ch"))
        man.add_file(dst, save_dataset(out, dst))
    man.save(paths.manifests / f"enhance-{mode}.json")
    return man


# ---------------------------------------------------------------------------
# estimator training


def _dataset_mode(zid):
    return "pilot" if zid.uses_pilot_grid else "full"


def train_estimator(config, model_id, train_seed=None, tag=""):
    """Train one zoo model on its matching dataset; returns (path, result)."""
    config.validate()
    zid = zoo.parse_zoo_id(model_id) if isinstance(model_id, str) else model_id
    paths = _recorded_paths(config)
    mode = _dataset_mode(zid)
    dpath = paths.train_set(mode, zid.in_channels)
    hint = "enhance" if zid.in_channels == 3 else "generate"
    ds = load_dataset(_require(dpath, hint))
    if ds.input_dims[2] != zid.in_channels:
        raise ConfigError(
            f"{zid} needs {zid.in_channels}-channel inputs but {dpath} holds "
            f"{ds.input_dims[2]}-channel data; regenerate or pick the matching variant"
        )

    catalog_idx = [str(z) for z in zoo.zoo_catalog()].index(str(zid))
    pattern = config.pilot_pattern()
    model = zoo.build_model(zid, pilot_grid=(pattern.n_pf, pattern.n_ps),
                            grid=config.frame_spec().shape)
    model.initialize(derived_rng(config.master_seed, DOMAIN_INIT, catalog_idx))
    if train_seed is None:
        train_seed = derived_seed(config.master_seed, DOMAIN_TRAIN, catalog_idx)
    spec = config.train_spec(zid.family, seed=int(train_seed))
    result = train(model, ds.inputs, ds.targets, spec)

    man = new_manifest("train", config)
    wpath = paths.model_weights(str(zid), tag)
    man.add_file(wpath, save_weights(model, wpath))
    if ds.fingerprint:
        man.ae_fingerprint = ds.fingerprint
    tname = f"{zid}-{tag}" if tag else str(zid)
    tpath = paths.trace_csv(tname)
    _write_trace(tpath, result)
    man.add_file(tpath, _text_digest(tpath))
    man.metrics = {
        "model": str(zid),
        "epochs": spec.epochs,
        "final_train_loss": result.final_train_loss,
        "best_epoch": result.best_epoch,
        "best_val_loss": result.best_val_loss,
    }
    man.save(paths.manifests / f"train-{tname}.json")
    return wpath, result


# ---------------------------------------------------------------------------
# evaluation


def _channel_stats(config, paths):
    stats_ds = load_dataset(_require(paths.stats_set(), "generate"))
    pattern = config.pilot_pattern()
    grids = (merge_reim(t) for t in np.asarray(stats_ds.targets, dtype=np.float64))
    return estimate_stats(grids, pattern, source={"file": str(paths.stats_set())})


def _eval_classical(name, pilot_ds, config, stats):
    """Mean squared error of LS or MMSE over one pilot-input test set."""
    pattern = config.pilot_pattern()
    dims = config.frame_spec().shape
    total = 0.0
    n_re = 0
    for i in range(pilot_ds.n_samples):
        h_ls_p = merge_reim(np.asarray(pilot_ds.inputs[i], dtype=np.float64))
        h_true = merge_reim(np.asarray(pilot_ds.targets[i], dtype=np.float64))
        snr = float(pilot_ds.snr_db[i])
        if name == "ls":
            est = ls_full(h_ls_p, pattern, dims, freq_edge=config.interp_edge)
        else:
            noise_var = 0.0 if math.isinf(snr) else 10.0 ** (-snr / 10.0)
            est = mmse_estimate(h_ls_p, stats, noise_var, 1.0, pattern, dims)
        diff = est.h_hat - h_true
        total += float(np.sum(diff.real**2 + diff.imag**2))
        n_re += diff.size
    return total / n_re


def _eval_model(model, test_ds):
    """Mean squared error per RE (|re|^2 + |im|^2) of a zoo model."""
    pred = model.predict(np.asarray(test_ds.inputs, dtype=np.float64))
    diff = pred - np.asarray(test_ds.targets, dtype=np.float64)
    return float(np.mean(np.sum(diff * diff, axis=-1)))


def _to_db(mse):
    return max(10.0 * math.log10(mse) if mse > 0 else -math.inf, -100.0)


def _prepare_models(config, paths, model_ids, weight_tag=""):
    """Build and load every requested zoo model; classical ids pass through."""
    pattern = config.pilot_pattern()
    dims = config.frame_spec().shape
    loaded = []
    for mid in model_ids:
        if mid in CLASSICAL_MODELS:
            loaded.append((mid, None, None))
            continue
        zid = zoo.parse_zoo_id(mid)
        model = zoo.build_model(zid, pilot_grid=(pattern.n_pf, pattern.n_ps),
                                grid=dims)
        wpath = paths.model_weights(str(zid), weight_tag)
        load_weights(model, _require(wpath, f"train --model {zid}"))
        loaded.append((str(zid), zid, model))
    return loaded


def eval_snr(config, model_ids, weight_tag="", csv_name="mse_vs_snr.csv",
             with_chart=True):
    """MSE-vs-SNR table over the generated test sets.

    Classical baselines (``ls``, ``mmse``) are always included ahead of
    the requested models.  Returns (csv_path, rows) where each row is
    (snr_db, model, mse_db, n_frames).
    """
    config.validate()
    paths = _recorded_paths(config)
    ids = [m for m in CLASSICAL_MODELS if m not in model_ids] + list(model_ids)
    loaded = _prepare_models(config, paths, ids, weight_tag)
    stats = _channel_stats(config, paths)

    rows = []
    man = new_manifest("eval-snr", config)
    for snr in config.snr_test:
        pilot_ds = load_dataset(_require(paths.test_set("pilot", 2, snr), "generate"))
        cache = {("pilot", 2): pilot_ds}
        for name, zid, model in loaded:
            if model is None:
                mse = _eval_classical(name, pilot_ds, config, stats)
                n = pilot_ds.n_samples
            else:
                key = (_dataset_mode(zid), zid.in_channels)
                if key not in cache:
                    hint = "enhance" if zid.in_channels == 3 else "generate"
                    cache[key] = load_dataset(
                        _require(paths.test_set(key[0], key[1], snr), hint))
                test_ds = cache[key]
                mse = _eval_model(model, test_ds)
                n = test_ds.n_samples
            rows.append((float(snr), name, _to_db(mse), n))

    csv_path = paths.results / csv_name
    _write_csv(csv_path, "snr_db,model,mse_db,n_frames",
               (f"{s:g},{m},{v:.6f},{n}" for s, m, v, n in rows))
    man.add_file(csv_path, _text_digest(csv_path))
    if with_chart:
        series = _series_by_model(rows, x_col=0)
        svg_path = csv_path.with_suffix(".svg")
        svg = line_chart(series, "SNR (dB)", "MSE (dB)",
                         title=f"MSE vs SNR ({config.channel})")
        svg_path.write_text(svg)
        man.add_file(svg_path, _text_digest(svg_path))
    man.metrics = {m: {f"{s:g}": round(v, 6) for s, mm, v, _ in rows if mm == m}
                   for m in dict.fromkeys(r[1] for r in rows)}
    man.save(paths.manifests / "eval-snr.json")
    return csv_path, rows


def eval_doppler(config, model_ids, weight_tag="", csv_name="mse_vs_doppler.csv",
                 with_chart=True):
    """MSE-vs-Doppler table at the fixed evaluation SNR.

    Test sets are regenerated in memory per speed point from derived
    seeds (they are small and fully reproducible), with the mobile
    speed held at the sweep value rather than drawn at random.
    """
    config.validate()
    paths = _recorded_paths(config)
    ids = [m for m in CLASSICAL_MODELS if m not in model_ids] + list(model_ids)
    loaded = _prepare_models(config, paths, ids, weight_tag)
    stats = _channel_stats(config, paths)
    frame = config.frame_spec()

    rows = []
    man = new_manifest("eval-doppler", config)
    for k, speed in enumerate(config.doppler_speeds):
        f_d = doppler_from_speed(speed, frame.carrier_freq)
        pilot_ds, full_ds = _simulate_set(
            config, SET_DOPPLER, k, config.doppler_snr_db,
            config.samples_per_snr, fixed_doppler=f_d)
        cache = {("pilot", 2): pilot_ds, ("full", 2): full_ds}
        ae_cache = {}
        for name, zid, model in loaded:
            if model is None:
                mse = _eval_classical(name, pilot_ds, config, stats)
                n = pilot_ds.n_samples
            else:
                key = (_dataset_mode(zid), zid.in_channels)
                if key not in cache:
                    mode = key[0]
                    if mode not in ae_cache:
                        ae_cache[mode] = _load_ae(config, paths, mode)
                    base = cache[(mode, 2)]
                    cache[key] = Dataset(
                        enhancer.enhance(
                            ae_cache[mode], base.inputs,
                            pre_relu=(config.ae_feature_tap == "pre_relu"),
                            normalize=config.enhance_normalize),
                        base.targets, base.snr_db, base.doppler_hz, base.seeds,
                        base.carrier_hz, base.spacing_hz,
                        weight_fingerprint(ae_cache[mode]),
                    )
                test_ds = cache[key]
                mse = _eval_model(model, test_ds)
                n = test_ds.n_samples
            rows.append((f_d, float(speed), name, _to_db(mse), n))

    csv_path = paths.results / csv_name
    _write_csv(csv_path, "doppler_hz,speed_kmh,model,mse_db,n_frames",
               (f"{d:.4f},{s:g},{m},{v:.6f},{n}" for d, s, m, v, n in rows))
    man.add_file(csv_path, _text_digest(csv_path))
    if with_chart:
        series = _series_by_model([(d, m, v, n) for d, s, m, v, n in rows], x_col=0)
        svg_path = csv_path.with_suffix(".svg")
        svg_path.write_text(
            line_chart(series, "Doppler shift (Hz)", "MSE (dB)",
                       title=f"MSE vs Doppler ({config.channel}, "
                             f"{config.doppler_snr_db:g} dB)"))
        man.add_file(svg_path, _text_digest(svg_path))
    man.save(paths.manifests / "eval-doppler.json")
    return csv_path, rows


def _series_by_model(rows, x_col=0):
    """(x, model, value, n) rows -> [(model, [(x, value), ...])]."""
    order = list(dict.fromkeys(r[1] for r in rows))
    return [(m, [(r[x_col], r[2]) for r in rows if r[1] == m]) for m in order]


# ---------------------------------------------------------------------------
# complexity report


_TOLERANCE = {"srcnn": 0.0, "reesnet": 0.0, "channelnet": 0.01, "interp-resnet": 0.02}


def complexity_report(config=None, model_ids=None):
    """Parameter/MAC table for the catalog, with published-count deltas.

    Returns (csv_path or None, rows); rows are dicts ready for printing.
    The CSV is written only when a config (hence an output dir) is given.
    """
    ids = [zoo.parse_zoo_id(m) for m in model_ids] if model_ids else zoo.zoo_catalog()
    rows = []
    for zid in ids:
        model = zoo.build_model(zid)
        published = zoo.PUBLISHED_PARAM_COUNTS.get(str(zid))
        n = model.param_count()
        delta = (n - published) / published if published else 0.0
        tol = _TOLERANCE[zid.family]
        rows.append({
            "model": str(zid),
            "params": n,
            "published": published,
            "delta_pct": 100.0 * delta,
            "tolerance_pct": 100.0 * tol,
            "within": abs(delta) <= tol + 1e-12,
            "macs": model.mac_count(),
            "input_dims": "x".join(map(str, model.input_shape)),
        })
    csv_path = None
    if config is not None:
        paths = _recorded_paths(config)
        csv_path = paths.results / "complexity.csv"
        _write_csv(
            csv_path,
            "model,params,published,delta_pct,tolerance_pct,within,macs,input_dims",
            (f"{r['model']},{r['params']},{r['published']},"
             f"{r['delta_pct']:.4f},{r['tolerance_pct']:g},"
             f"{str(r['within']).lower()},{r['macs']},{r['input_dims']}"
             for r in rows),
        )
        man = new_manifest("report", config)
        man.add_file(csv_path, _text_digest(csv_path))
        man.save(paths.manifests / "report.json")
    return csv_path, rows


# ---------------------------------------------------------------------------
# small shared helpers


def _write_trace(path, result):
    _write_csv(path, "epoch,lr,train_loss,val_loss",
               (f"{e.epoch},{e.lr:.8g},{e.train_loss:.8g},{e.val_loss:.8g}"
                for e in result.trace))


def _write_csv(path, header, lines):
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for line in lines:
            fh.write(line + "\n")
    return path


def _text_digest(path):
    return file_digest(path)
