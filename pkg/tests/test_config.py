"""Experiment configuration: profiles, INI round-trips, training specs."""

import pytest

from chanest.config import (
    ExperimentConfig,
    config_hash,
    default_config,
    load_config,
    render_config,
    write_config,
)
from chanest.errors import ConfigError


class TestProfiles:
    def test_desk_defaults(self):
        cfg = default_config("desk")
        assert cfg.profile == "desk"
        assert cfg.channel == "EPA"
        assert cfg.samples_per_snr == 500
        assert cfg.stats_samples == 2000
        assert cfg.snr_train == (0.0, 5.0, 10.0, 15.0, 20.0)
        assert cfg.snr_test == (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
        assert cfg.speed_range == (0.0, 50.0)
        assert cfg.doppler_speeds == tuple(range(0, 161, 20))
        assert cfg.master_seed == 7041

    def test_full_profile_scales_up(self):
        cfg = default_config("full")
        assert cfg.samples_per_snr == 5000
        assert cfg.stats_samples == 5000
        assert cfg.out_dir.endswith("full-epa")

    def test_unknown_profile(self):
        with pytest.raises(ConfigError):
            default_config("laptop")

    def test_desk_training_epochs_quartered(self):
        cfg = default_config("desk")
        assert cfg.train_spec("srcnn").epochs == 25
        assert cfg.train_spec("channelnet").epochs == 13
        assert cfg.train_spec("reesnet").epochs == 13
        assert cfg.train_spec("interp-resnet").epochs == 13
        assert cfg.train_spec("ae").epochs == 25
        # Residual families halve the LR every 5 epochs at desk scale.
        assert cfg.train_spec("reesnet").lr_drop_period == 5
        assert cfg.train_spec("srcnn").lr_drop_period == 0

    def test_full_training_epochs(self):
        cfg = default_config("full")
        assert cfg.train_spec("srcnn").epochs == 100
        assert cfg.train_spec("channelnet").epochs == 50
        spec = cfg.train_spec("reesnet")
        assert spec.epochs == 50
        assert spec.lr_drop_period == 20
        assert spec.lr_drop_factor == 0.5
        assert cfg.train_spec("ae").epochs == 100

    def test_train_spec_common_fields(self):
        cfg = default_config("desk")
        spec = cfg.train_spec("srcnn", seed=9)
        assert spec.batch_size == 128
        assert spec.initial_lr == pytest.approx(1e-3)
        assert spec.val_fraction == pytest.approx(0.2)
        assert spec.select == "best_val"
        assert spec.seed == 9

    def test_train_spec_unknown_model(self):
        with pytest.raises(ConfigError):
            default_config("desk").train_spec("vit")

    def test_overrides_merge(self):
        cfg = default_config("desk")
        cfg.train_overrides["srcnn"] = {"epochs": 3, "initial_lr": 5e-4}
        spec = cfg.train_spec("srcnn")
        assert spec.epochs == 3
        assert spec.initial_lr == pytest.approx(5e-4)
        assert spec.batch_size == 128  # untouched fields keep profile values


class TestFramePilot:
    def test_frame_spec_numerology(self):
        frame = default_config("desk").frame_spec()
        assert frame.shape == (72, 14)
        assert frame.subcarrier_spacing == pytest.approx(15e3)
        assert frame.carrier_freq == pytest.approx(2.1e9)

    def test_pilot_pattern_counts(self):
        pattern = default_config("desk").pilot_pattern()
        assert pattern.n_pf == 24
        assert pattern.n_ps == 2
        assert pattern.pilot_symbols == (1, 13)


class TestIniRoundtrip:
    def test_render_is_stable_fixed_point(self, tmp_path):
        cfg = default_config("desk")
        text = render_config(cfg)
        path = tmp_path / "run.ini"
        path.write_text(text)
        again = render_config(load_config(path))
        assert again == text

    def test_write_config(self, tmp_path):
        cfg = default_config("desk")
        path = tmp_path / "run.ini"
        write_config(cfg, path)
        assert render_config(load_config(path)) == render_config(cfg)

    def test_values_survive_roundtrip(self, tmp_path):
        cfg = default_config("desk")
        cfg.channel = "EVA"
        cfg.samples_per_snr = 123
        cfg.snr_test = (3.0, 7.5)
        cfg.train_overrides["reesnet"] = {"epochs": 2}
        path = tmp_path / "run.ini"
        write_config(cfg, path)
        got = load_config(path)
        assert got.channel == "EVA"
        assert got.samples_per_snr == 123
        assert got.snr_test == (3.0, 7.5)
        assert got.train_spec("reesnet").epochs == 2

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[experiment]\nprofile = desk\n\n[plotting]\ncolor = red\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        cfg = default_config("desk")
        text = render_config(cfg).replace("master_seed", "master_sede", 1)
        path = tmp_path / "run.ini"
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_config(path)

    def test_profile_argument_overrides_file(self, tmp_path):
        path = tmp_path / "run.ini"
        write_config(default_config("desk"), path)
        got = load_config(path, profile="full")
        assert got.profile == "full"


class TestConfigHash:
    def test_stable_across_instances(self):
        assert config_hash(default_config("desk")) == config_hash(default_config("desk"))

    def test_sensitive_to_values(self):
        a = default_config("desk")
        b = default_config("desk")
        b.master_seed = 8000
        assert config_hash(a) != config_hash(b)


class TestValidation:
    def test_bad_channel(self):
        cfg = default_config("desk")
        cfg.channel = "ETU"
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_bad_speed_range(self):
        cfg = default_config("desk")
        cfg.speed_range = (50.0, 0.0)
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_bad_workers(self):
        cfg = default_config("desk")
        cfg.workers = 0
        with pytest.raises(ConfigError):
            cfg.validate()
