"""Tests for config module."""

import json

import pytest

from temporal_spotting.config import (
    RUN_CONFIG_FILE,
    THREADS_ENV,
    ModelSection,
    RunConfig,
    SpotSection,
    load_config_file,
    resolve_run_config,
    write_run_config,
)
from temporal_spotting.errors import ConfigError


class TestModelSection:
    """Tests for ModelSection."""

    def test_window_split_defaults_to_halves(self):
        """Test a 20 s window splits 10 s / 10 s."""
        section = ModelSection(window_s=20.0)
        assert (section.before_s, section.after_s) == (10.0, 10.0)

    def test_explicit_split_must_sum_to_window(self):
        """Test mismatched before/after durations."""
        with pytest.raises(ConfigError):
            ModelSection(window_s=15.0, before_s=5.0, after_s=5.0)

    def test_unknown_kind_is_config_error(self):
        """Test an unknown pooling kind."""
        with pytest.raises(ConfigError, match="Unknown pooling kind"):
            ModelSection(kind="attention")

    def test_model_config_adds_background(self):
        """Test the classifier gets one output per class plus background."""
        config = ModelSection(input_dim=8, reduced_dim=4, clusters=4).model_config(["goal", "card"], seed=3)
        assert config.num_classes == 3
        assert config.class_names[-1] == "__background__"
        assert config.seed == 3

    def test_model_config_without_projection(self):
        """Test disabling the projection pools the input dimension."""
        config = ModelSection(input_dim=8, use_projection=False, clusters=4).model_config(["goal"], seed=0)
        assert config.reduced_dim == 8

    def test_unresolved_input_dim(self):
        """Test building a model before the dataset fixed the input dim."""
        with pytest.raises(ConfigError, match="input_dim"):
            ModelSection().model_config(["goal"], seed=0)


class TestRunConfig:
    """Tests for RunConfig."""

    def test_seed_propagates(self):
        """Test the top-level seed reaches training and the generator."""
        config = RunConfig(seed=11)
        assert config.train.seed == 11
        assert config.synthetic.seed == 11

    def test_dict_round_trip(self):
        """Test to_dict / from_dict."""
        config = RunConfig(seed=2, threads=3, spot=SpotSection(nms_window_s=20.0))
        assert RunConfig.from_dict(config.to_dict()) == config

    def test_unknown_section_key(self):
        """Test an unknown key lists the valid ones."""
        with pytest.raises(ConfigError, match="Unknown config key\\(s\\) for train: learning_rate"):
            RunConfig.from_dict({"train": {"learning_rate": 0.1}})

    def test_unknown_top_level_key(self):
        """Test an unknown top-level section."""
        with pytest.raises(ConfigError, match="for run"):
            RunConfig.from_dict({"optimizer": {}})

    def test_invalid_value(self):
        """Test a value rejected by the section itself."""
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"train": {"patience": 0}})

    def test_section_must_be_object(self):
        """Test a section given as a scalar."""
        with pytest.raises(ConfigError, match="must be an object"):
            RunConfig.from_dict({"model": 5})


class TestResolveRunConfig:
    """Tests for resolve_run_config function."""

    def test_defaults(self):
        """Test no file and no flags give the dataclass defaults."""
        config = resolve_run_config(env={})
        assert config.train.initial_lr == 1e-3
        assert config.model.clusters == 64
        assert config.threads >= 1

    def test_layering(self, tmp_path):
        """Test file values beat defaults and flags beat the file."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"train": {"initial_lr": 0.01, "patience": 4}, "model": {"clusters": 16}}))
        config = resolve_run_config(path, {"train.initial_lr": 0.05, "model.clusters": None}, env={})
        assert config.train.initial_lr == 0.05
        assert config.train.patience == 4
        assert config.model.clusters == 16

    def test_command_defaults_sit_below_the_file(self, tmp_path):
        """Test command defaults beat dataclass defaults but lose to the file and flags."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"model": {"clusters": 16}}))
        defaults = {"model.clusters": 8, "model.reduced_dim": 32}
        config = resolve_run_config(path, {"model.clusters": None}, env={}, defaults=defaults)
        assert config.model.clusters == 16
        assert config.model.reduced_dim == 32
        flagged = resolve_run_config(path, {"model.clusters": 4}, env={}, defaults=defaults)
        assert flagged.model.clusters == 4
        assert resolve_run_config(None, {}, env={}, defaults=defaults).model.clusters == 8

    def test_threads_from_environment(self, tmp_path):
        """Test the environment overrides flags for the thread count."""
        config = resolve_run_config(overrides={"threads": 2}, env={THREADS_ENV: "5"})
        assert config.threads == 5

    def test_bad_threads_environment(self):
        """Test a non-integer thread count."""
        with pytest.raises(ConfigError, match=THREADS_ENV):
            resolve_run_config(env={THREADS_ENV: "many"})

    def test_missing_file(self, tmp_path):
        """Test a config path that does not exist."""
        with pytest.raises(FileNotFoundError):
            resolve_run_config(tmp_path / "absent.json", env={})

    def test_file_must_hold_object(self, tmp_path):
        """Test a JSON array as config file."""
        path = tmp_path / "cfg.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config_file(path)


class TestWriteRunConfig:
    """Tests for write_run_config function."""

    def test_written_config_reloads(self, tmp_path):
        """Test run_config.json resolves back to the same configuration."""
        config = RunConfig(seed=4, threads=1).with_input_dim(32)
        path = write_run_config(config, tmp_path)
        assert path.name == RUN_CONFIG_FILE
        assert resolve_run_config(path, env={}) == config

    def test_sorted_keys(self, tmp_path):
        """Test stable key order in the written file."""
        text = write_run_config(RunConfig(), tmp_path).read_text()
        data = json.loads(text)
        assert list(data) == sorted(data)
        assert "seed" not in data["train"]
