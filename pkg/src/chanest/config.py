"""Experiment configuration: profiles, INI round-trip, hashing.

A configuration is a flat set of key=value entries grouped in sections;
``default_config`` builds the two named profiles and ``load_config``
overlays a file on top of a profile's defaults.  Every run writes the
resolved configuration back next to its outputs, and ``config_hash``
over the canonical rendering ties manifests to the exact settings.

Profiles:

* ``desk``  — 500 samples per SNR point, epochs and LR-drop period
  quartered; minutes-scale CPU runs that preserve trends.
* ``full``  — 5,000 samples per SNR point and the published training
  schedules (SRCNN 100 epochs, others 50, residual families halving
  the LR every 20 epochs); hours of CPU.
"""

import configparser
import hashlib
import io
from dataclasses import dataclass, field

from .channel import FrameSpec
from .errors import ConfigError
from .link import PilotPattern
from .nn import TrainConfig

PROFILES = ("desk", "full")

#: Published per-model schedules: epochs, LR drop period (0 = constant).
_FULL_TRAIN = {
    "srcnn": (100, 0),
    "channelnet": (50, 0),
    "reesnet": (50, 20),
    "interp-resnet": (50, 20),
    "ae": (100, 0),
}
#: Desk profile quarters both the epochs and the drop period.
_DESK_TRAIN = {
    "srcnn": (25, 0),
    "channelnet": (13, 0),
    "reesnet": (13, 5),
    "interp-resnet": (13, 5),
    "ae": (25, 0),
}


@dataclass
class ExperimentConfig:
    profile: str = "desk"
    channel: str = "EPA"
    master_seed: int = 7041
    samples_per_snr: int = 500
    stats_samples: int = 2000
    snr_train: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    snr_test: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    speed_range: tuple = (0.0, 50.0)
    doppler_speeds: tuple = (0.0, 20.0, 40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 160.0)
    doppler_snr_db: float = 15.0
    workers: int = 1
    out_dir: str = "runs/desk-epa"
    # frame
    n_subcarriers: int = 72
    n_symbols: int = 14
    subcarrier_spacing_hz: float = 15e3
    carrier_hz: float = 2.1e9
    cp_samples: int = 16
    fft_size: int = 128
    # pilots
    pilot_symbols: tuple = (1, 13)
    pilot_offsets: tuple = (1, 2)
    pilot_step: int = 3
    pilot_kind: str = "qpsk"
    # estimation / enhancement knobs
    interp_edge: str = "extrapolate"
    ae_feature_tap: str = "post_relu"
    enhance_normalize: str = "none"
    # training
    train_select: str = "best_val"
    val_fraction: float = 0.2
    batch_size: int = 128
    initial_lr: float = 1e-3
    lr_drop_factor: float = 0.5
    train_overrides: dict = field(default_factory=dict)

    def validate(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"profile must be one of {PROFILES}, got {self.profile!r}")
        if self.channel not in ("EPA", "EVA"):
            raise ConfigError(f"channel must be EPA or EVA, got {self.channel!r}")
        for name in ("snr_train", "snr_test", "doppler_speeds"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
        if self.samples_per_snr < 1 or self.stats_samples < 1:
            raise ConfigError("sample counts must be positive")
        if len(self.speed_range) != 2 or self.speed_range[0] > self.speed_range[1]:
            raise ConfigError(f"bad speed_range {self.speed_range}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.pilot_kind != "qpsk":
            raise ConfigError(f"unsupported pilot kind {self.pilot_kind!r}")
        if self.interp_edge not in ("extrapolate", "clamp"):
            raise ConfigError(f"interp edge must be extrapolate or clamp")
        if self.ae_feature_tap not in ("post_relu", "pre_relu"):
            raise ConfigError("ae feature_tap must be post_relu or pre_relu")
        if self.enhance_normalize not in ("none", "rms"):
            raise ConfigError("enhance normalize must be none or rms")
        for fam in self.train_overrides:
            if fam not in _FULL_TRAIN:
                raise ConfigError(f"unknown train override section [train.{fam}]")
        return self

    # -- derived objects ------------------------------------------------
    def frame_spec(self):
        return FrameSpec(
            n_subcarriers=self.n_subcarriers,
            n_symbols=self.n_symbols,
            subcarrier_spacing=self.subcarrier_spacing_hz,
            carrier_freq=self.carrier_hz,
            cp_samples=self.cp_samples,
            fft_size=self.fft_size,
        )

    def pilot_pattern(self):
        frame = self.frame_spec()
        n_pf = (frame.n_subcarriers - max(self.pilot_offsets)) // self.pilot_step + 1
        return PilotPattern(
            pilot_symbols=tuple(self.pilot_symbols),
            start_offsets=tuple(self.pilot_offsets),
            step=self.pilot_step,
            n_pf=n_pf,
            grid_shape=frame.shape,
        )

    def train_spec(self, name, seed=0):
        """TrainConfig for a model family or "ae" under this profile."""
        table = _DESK_TRAIN if self.profile == "desk" else _FULL_TRAIN
        if name not in table:
            raise ConfigError(f"no training schedule for {name!r}")
        epochs, drop_period = table[name]
        spec = dict(
            epochs=epochs,
            batch_size=self.batch_size,
            initial_lr=self.initial_lr,
            lr_drop_period=drop_period,
            lr_drop_factor=self.lr_drop_factor if drop_period else 1.0,
            val_fraction=self.val_fraction,
            select=self.train_select,
        )
        spec.update(self.train_overrides.get(name, {}))
        return TrainConfig(seed=seed, **spec)


def default_config(profile="desk"):
    if profile not in PROFILES:
        raise ConfigError(f"profile must be one of {PROFILES}, got {profile!r}")
    cfg = ExperimentConfig(profile=profile)
    if profile == "full":
        cfg.samples_per_snr = 5000
        cfg.stats_samples = 5000
        cfg.out_dir = "runs/full-epa"
    return cfg


def _fmt_list(values):
    return ",".join(format(v, "g") if isinstance(v, float) else str(v) for v in values)


def render_config(config):
    """Canonical INI rendering of a resolved configuration."""
    cp = configparser.ConfigParser()
    cp["experiment"] = {
        "profile": config.profile,
        "channel": config.channel,
        "master_seed": str(config.master_seed),
        "samples_per_snr": str(config.samples_per_snr),
        "stats_samples": str(config.stats_samples),
        "snr_train": _fmt_list(config.snr_train),
        "snr_test": _fmt_list(config.snr_test),
        "speed_range": _fmt_list(config.speed_range),
        "doppler_speeds": _fmt_list(config.doppler_speeds),
        "doppler_snr_db": format(config.doppler_snr_db, "g"),
        "workers": str(config.workers),
        "out_dir": config.out_dir,
    }
    cp["frame"] = {
        "n_subcarriers": str(config.n_subcarriers),
        "n_symbols": str(config.n_symbols),
        "subcarrier_spacing_hz": format(config.subcarrier_spacing_hz, "g"),
        "carrier_hz": format(config.carrier_hz, "g"),
        "cp_samples": str(config.cp_samples),
        "fft_size": str(config.fft_size),
    }
    cp["pilot"] = {
        "symbols": _fmt_list(config.pilot_symbols),
        "offsets": _fmt_list(config.pilot_offsets),
        "step": str(config.pilot_step),
        "kind": config.pilot_kind,
    }
    cp["interp"] = {"edge": config.interp_edge}
    cp["ae"] = {"feature_tap": config.ae_feature_tap}
    cp["enhance"] = {"normalize": config.enhance_normalize}
    cp["train"] = {
        "select": config.train_select,
        "val_fraction": format(config.val_fraction, "g"),
        "batch_size": str(config.batch_size),
        "initial_lr": format(config.initial_lr, "g"),
        "lr_drop_factor": format(config.lr_drop_factor, "g"),
    }
    for fam in sorted(config.train_overrides):
        cp[f"train.{fam}"] = {
            k: format(v, "g") if isinstance(v, float) else str(v)
            for k, v in sorted(config.train_overrides[fam].items())
        }
    out = io.StringIO()
    cp.write(out)
    return out.getvalue()


def write_config(config, path):
    with open(path, "w") as fh:
        fh.write(render_config(config))


def config_hash(config):
    return hashlib.sha256(render_config(config).encode()).hexdigest()


def _floats(text):
    return tuple(float(v) for v in text.replace(" ", "").split(",") if v)


def _ints(text):
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


_TRAIN_OVERRIDE_TYPES = {
    "epochs": int,
    "batch_size": int,
    "initial_lr": float,
    "lr_drop_period": int,
    "lr_drop_factor": float,
    "val_fraction": float,
    "select": str,
}


def load_config(path, profile=None):
    """Read an INI file onto profile defaults; unknown keys are errors."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    file_profile = cp.get("experiment", "profile", fallback=None)
    cfg = default_config(profile or file_profile or "desk")
    known = {
        "experiment": {
            "profile": (str, "profile"), "channel": (str.upper, "channel"),
            "master_seed": (int, None), "samples_per_snr": (int, None),
            "stats_samples": (int, None), "snr_train": (_floats, None),
            "snr_test": (_floats, None), "speed_range": (_floats, None),
            "doppler_speeds": (_floats, None), "doppler_snr_db": (float, None),
            "workers": (int, None), "out_dir": (str, None),
        },
        "frame": {
            "n_subcarriers": (int, None), "n_symbols": (int, None),
            "subcarrier_spacing_hz": (float, None), "carrier_hz": (float, None),
            "cp_samples": (int, None), "fft_size": (int, None),
        },
        "pilot": {
            "symbols": (_ints, "pilot_symbols"), "offsets": (_ints, "pilot_offsets"),
            "step": (int, "pilot_step"), "kind": (str, "pilot_kind"),
        },
        "interp": {"edge": (str, "interp_edge")},
        "ae": {"feature_tap": (str, "ae_feature_tap")},
        "enhance": {"normalize": (str, "enhance_normalize")},
        "train": {
            "select": (str, "train_select"), "val_fraction": (float, None),
            "batch_size": (int, None), "initial_lr": (float, None),
            "lr_drop_factor": (float, None),
        },
    }
    for section in cp.sections():
        if section.startswith("train."):
            fam = section[len("train."):]
            over = {}
            for key, raw in cp.items(section):
                if key not in _TRAIN_OVERRIDE_TYPES:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                over[key] = _TRAIN_OVERRIDE_TYPES[key](raw)
            cfg.train_overrides[fam] = over
            continue
        if section not in known:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in known[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            conv, attr = known[section][key]
            setattr(cfg, attr or key, conv(raw))
    if profile is not None:
        cfg.profile = profile
    return cfg.validate()
