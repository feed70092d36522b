"""Shared fixtures: a tiny end-to-end run reused by pipeline and CLI tests."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from chanest import pipeline
from chanest.config import default_config


def tiny_config(out_dir, **overrides):
    """A seconds-scale configuration that still exercises every stage."""
    cfg = default_config("desk")
    cfg.out_dir = str(out_dir)
    cfg.samples_per_snr = 8
    cfg.stats_samples = 40
    cfg.snr_train = (5.0, 15.0)
    cfg.snr_test = (5.0, 15.0)
    cfg.doppler_speeds = (0.0, 160.0)
    cfg.train_overrides = {
        "ae": {"epochs": 2, "batch_size": 8},
        "srcnn": {"epochs": 2, "batch_size": 8},
        "channelnet": {"epochs": 1, "batch_size": 8},
        "reesnet": {"epochs": 2, "batch_size": 8},
        "interp-resnet": {"epochs": 2, "batch_size": 8},
    }
    for key, value in overrides.items():
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


@pytest.fixture(scope="session")
def mini_run(tmp_path_factory):
    """Generate + train both autoencoders + enhance, once per session."""
    out = tmp_path_factory.mktemp("mini-run")
    cfg = tiny_config(out)
    pipeline.generate(cfg)
    pipeline.train_ae(cfg, "pilot")
    pipeline.train_ae(cfg, "full")
    pipeline.enhance(cfg, "pilot")
    pipeline.enhance(cfg, "full")
    return cfg
