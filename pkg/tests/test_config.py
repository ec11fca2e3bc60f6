"""
Tests for experiment configs and environment settings.
"""

import json

import numpy as np
import pytest

from pdnet.algorithms import preset
from pdnet.config import ExperimentConfig, PresetSpec, TradeoffSpec, VerifySpec
from pdnet.errors import ConfigError
from pdnet.problems import NonsmoothTerm
from pdnet.settings import Settings, configure_settings, get_settings
from pdnet.testing import BaseTestCase
from pdnet.topology import Graph


class TestExperimentConfig(BaseTestCase):
    """Test cases for ExperimentConfig."""

    def test_defaults(self):
        """Test an empty config runs NIDS on a 10-ring at gamma*."""
        config = ExperimentConfig.from_dict({})
        assert config.graph.generator == "ring" and config.graph.m == 10
        assert config.preset.name == "nids"
        assert config.gamma == "star"
        assert config.seed is None and config.output_dir is None
        assert config.verify.sizes == (3, 10)

    def test_fixture_run(self):
        """Test the run fixture parses and builds its network and problem."""
        config = ExperimentConfig.from_dict(self.load_fixtures("experiment")["run"])
        w = config.graph.build(0)
        p = config.problem.build(w.m, 0)
        assert (w.m, p.d) == (10, 5)
        assert p.kappa == pytest.approx(10.0)
        assert config.preset.build(w).label == "nids"

    def test_preset_forms(self, ring10):
        """Test presets given by name, alias or object."""
        assert PresetSpec.from_value("exact_diffusion").name == "nids"
        spec = PresetSpec.from_value({"name": "chebyshev", "params": {"k": 3}})
        assert spec.build(ring10).label == "chebyshev(k=3)"
        broken = PresetSpec.from_value({"name": "nids", "a_scale": 0.9})
        assert broken.build(ring10).A[0, 0] == pytest.approx(0.9 * ring10.entries[0, 0] * 0.5 + 0.45)

    def test_unknown_keys(self):
        """Test unknown top-level and section keys are rejected."""
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_dict({"iterations": 10})
        with pytest.raises(ConfigError, match="unknown keys in 'graph'"):
            ExperimentConfig.from_dict({"graph": {"size": 10}})
        with pytest.raises(ConfigError, match="unknown keys in 'preset'"):
            ExperimentConfig.from_dict({"preset": {"name": "nids", "k": 2}})

    def test_invalid_values(self):
        """Test bad values raise ConfigError."""
        for data in (
            {"gamma": -1.0},
            {"gamma": "auto"},
            {"iters": 0},
            {"seed": -3},
            {"graph": {"generator": "torus"}},
            {"problem": {"mu": 2.0, "L": 1.0}},
            {"preset": "admm"},
            {"verify": {"sizes": [1]}},
            {"tradeoff": {"points": [[0.5]]}},
        ):
            with pytest.raises(ConfigError):
                ExperimentConfig.from_dict(data)

    def test_flags_must_be_booleans(self):
        """Test switches reject strings and numbers instead of coercing them."""
        for data in (
            {"graph": {"lazy": "false"}},
            {"graph": {"lazy": 1}},
            {"problem": {"shared_basis": "no"}},
            {"tradeoff": {"end_to_end": "true"}},
        ):
            with pytest.raises(ConfigError, match="must be true or false"):
                ExperimentConfig.from_dict(data)
        config = ExperimentConfig.from_dict({"graph": {"lazy": True}, "tradeoff": {"end_to_end": False}})
        assert config.graph.lazy is True
        assert config.tradeoff.end_to_end is False

    def test_round_count_must_be_integer(self, ring10):
        """Test a fractional or non-positive k is rejected rather than truncated."""
        for k in (2.5, 0, True):
            with pytest.raises(ConfigError, match="preset.params.k"):
                PresetSpec.from_value({"name": "chebyshev", "params": {"k": k}})
        with pytest.raises(ConfigError, match="integer k"):
            preset("chebyshev", ring10, k=2.5)

    def test_independent_bases(self):
        """Test problem.shared_basis reaches the generator."""
        config = ExperimentConfig.from_dict({"problem": {"d": 3, "shared_basis": False}})
        p = config.problem.build(4, 0)
        Q0, Q1 = p.hessians[0], p.hessians[1]
        assert np.linalg.norm(Q0 @ Q1 - Q1 @ Q0) > 1e-3

    def test_relative_paths(self, tmp_path):
        """Test graph and problem files resolve against the config directory."""
        (tmp_path / "net").mkdir()
        Graph.path(4).dump(tmp_path / "net" / "path.txt")
        path = tmp_path / "experiment.json"
        path.write_text(json.dumps({"graph": {"file": "net/path.txt"}, "output": {"dir": "results"}}))
        config = ExperimentConfig.load(path)
        assert config.graph.file == tmp_path / "net" / "path.txt"
        assert config.graph.build(0).m == 4
        assert config.output_dir == tmp_path / "results"

    def test_problem_file(self, tmp_path):
        """Test a saved problem is loaded instead of generated."""
        p = self.problem(m=4, d=2, nonsmooth=NonsmoothTerm.l1(0.2))
        p.save(tmp_path / "problem.json")
        config = ExperimentConfig.from_dict({"problem": {"file": "problem.json"}}, tmp_path)
        np.testing.assert_allclose(config.problem.build(4, 99).offsets, p.offsets)

    def test_invalid_json(self, tmp_path):
        """Test malformed JSON raises ConfigError and a missing file raises OSError."""
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            ExperimentConfig.load(path)
        with pytest.raises(OSError):
            ExperimentConfig.load(tmp_path / "missing.json")

    def test_overrides(self, tmp_path):
        """Test seed and output overrides leave other fields alone."""
        config = ExperimentConfig.from_dict({"seed": 1, "iters": 50})
        changed = config.with_overrides(seed=7, output_dir=tmp_path)
        assert (changed.seed, changed.iters, changed.output_dir) == (7, 50, tmp_path)
        assert config.with_overrides().seed == 1

    def test_trial_count(self):
        """Test verify.trials takes precedence over the top-level key."""
        assert ExperimentConfig.from_dict({"trials": 5}).trial_count == 5
        assert ExperimentConfig.from_dict({"trials": 5, "verify": {"trials": 9}}).trial_count == 9
        assert ExperimentConfig.from_dict({}).trial_count is None


class TestSections(BaseTestCase):
    """Test cases for the verify and tradeoff sections."""

    def test_verify_section(self):
        """Test verify presets are canonicalized and the nonsmooth term parsed."""
        l1 = {"kind": "l1", "weight": 0.2}
        spec = VerifySpec.from_dict({"presets": ["exact_diffusion"], "nonsmooth": l1})
        assert spec.presets == ("nids",)
        assert spec.nonsmooth.weight == 0.2

    def test_tradeoff_grid(self):
        """Test the default grid and explicit points."""
        assert len(TradeoffSpec().grid()) == 361
        spec = TradeoffSpec.from_dict(self.load_fixtures("experiment")["tradeoff_point"]["tradeoff"])
        assert spec.grid() == [(0.6, 0.7745966692414834)]
        assert spec.rho_opt_values() == [0.7745966692414834]

    def test_tradeoff_axis(self):
        """Test custom axes and their validation."""
        spec = TradeoffSpec.from_dict({"rho_com": {"start": 0.5, "stop": 0.9, "step": 0.2}})
        assert len(spec.grid()) == 3 * 19
        with pytest.raises(ConfigError):
            TradeoffSpec.from_dict({"rho_opt": {"start": 0.5}})


class TestSettings(BaseTestCase):
    """Test cases for environment settings."""

    def test_defaults(self):
        """Test the built-in defaults."""
        settings = Settings()
        assert (settings.out_dir, settings.seed, settings.trials) == ("out", 0, 100)
        assert settings.log_level == "WARNING"

    def test_environment(self, monkeypatch, tmp_path):
        """Test PDNET_* variables are read and the level upper-cased."""
        monkeypatch.setenv("PDNET_SEED", "11")
        monkeypatch.setenv("PDNET_LOG_LEVEL", "debug")
        settings = Settings.from_env(tmp_path / "absent.env")
        assert settings.seed == 11
        assert settings.log_level == "DEBUG"

    def test_env_file(self, monkeypatch, tmp_path):
        """Test a .env file fills unset variables."""
        monkeypatch.setenv("PDNET_TRIALS", "placeholder")
        monkeypatch.delenv("PDNET_TRIALS")
        env_file = tmp_path / ".env"
        env_file.write_text("PDNET_TRIALS=42\n")
        assert Settings.from_env(env_file).trials == 42

    def test_bad_integer(self, monkeypatch, tmp_path):
        """Test a non-integer seed raises ConfigError."""
        monkeypatch.setenv("PDNET_SEED", "abc")
        with pytest.raises(ConfigError):
            Settings.from_env(tmp_path / "absent.env")

    def test_overrides_and_global(self):
        """Test overrides skip None and configure_settings replaces the global."""
        settings = Settings().with_overrides(seed=3, out_dir=None)
        assert settings.seed == 3 and settings.out_dir == "out"
        configure_settings(settings)
        assert get_settings() is settings
        configure_settings(Settings())
