"""
Tests for the pdnet command line.
"""

import csv
import json

import pytest

from pdnet import __version__
from pdnet.algorithms.unified import TRAJECTORY_COLUMNS
from pdnet.cli import build_parser, main
from pdnet.testing import BaseTestCase
from pdnet.tradeoff import TRADEOFF_COLUMNS


class TestCli(BaseTestCase):
    """Test cases for the run, verify and tradeoff subcommands."""

    def write_config(self, tmp_path, name, **changes):
        data = {**self.load_fixtures("experiment")[name], **changes}
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(data))
        return str(path)

    def test_run(self, tmp_path, capsys):
        """Test a NIDS run passes and writes its three artifacts."""
        out = tmp_path / "out"
        code = main(["run", "--config", self.write_config(tmp_path, "run"), "--out", str(out)])
        assert code == 0
        assert "✅" in capsys.readouterr().out

        with open(out / "trajectory.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == TRAJECTORY_COLUMNS
        assert len(rows) == 801
        assert rows[1][0] == "1"

        report = json.loads((out / "certification.json").read_text())
        assert report["pass"] is True
        assert report["lambda_emp"] <= report["prediction"]["lambda"] + 0.02
        assert report["validation"]["passed"] is True
        assert report["max_dual_sum"] <= 1e-12
        assert "PASS" in (out / "summary.md").read_text()

    def test_run_composite(self, tmp_path):
        """Test an l1-regularized run reaches the KKT tolerance."""
        out = tmp_path / "out"
        assert main(["run", "--config", self.write_config(tmp_path, "run_l1"), "--out", str(out)]) == 0
        report = json.loads((out / "certification.json").read_text())
        assert report["problem"]["nonsmooth"]["kind"] == "l1"
        assert max(report["kkt_primal"], report["kkt_dual"]) <= 1e-6

    def test_run_is_deterministic(self, tmp_path):
        """Test repeated runs with the same seed write byte-identical CSV."""
        config = self.write_config(tmp_path, "run", iters=100, seed=3)
        assert main(["run", "--config", config, "--out", str(tmp_path / "a")]) in (0, 2)
        assert main(["run", "--config", config, "--out", str(tmp_path / "b")]) in (0, 2)
        first = (tmp_path / "a" / "trajectory.csv").read_bytes()
        assert first == (tmp_path / "b" / "trajectory.csv").read_bytes()

    def test_seed_flag_overrides_config(self, tmp_path):
        """Test --seed wins over the config seed."""
        config = self.write_config(tmp_path, "run", iters=20)
        main(["run", "--config", config, "--out", str(tmp_path / "a"), "--seed", "5"])
        main(["run", "--config", config, "--out", str(tmp_path / "b")])
        a = json.loads((tmp_path / "a" / "certification.json").read_text())
        b = json.loads((tmp_path / "b" / "certification.json").read_text())
        assert (a["seed"], b["seed"]) == (5, 0)

    def test_short_run_fails_certification(self, tmp_path, capsys):
        """Test a run too short to reach the KKT tolerance exits 2 but still writes artifacts."""
        out = tmp_path / "out"
        code = main(["run", "--config", self.write_config(tmp_path, "run", iters=50), "--out", str(out)])
        assert code == 2
        assert "certification-failed" in capsys.readouterr().err
        assert json.loads((out / "certification.json").read_text())["pass"] is False

    def test_assumption_violation(self, tmp_path, capsys):
        """Test a triple failing validation exits 2 and names the failed check."""
        config = self.write_config(tmp_path, "broken")
        code = main(["run", "--config", config, "--out", str(tmp_path / "out")])
        assert code == 2
        err = capsys.readouterr().err
        assert "assumption-violation" in err
        assert "a_sum" in err

    def test_divergence(self, tmp_path, capsys):
        """Test an oversized step exits 3."""
        config = self.write_config(tmp_path, "run", gamma=10.0)
        assert main(["run", "--config", config, "--out", str(tmp_path / "out")]) == 3
        assert "divergence" in capsys.readouterr().err

    def test_verify(self, tmp_path):
        """Test verify passes and records every preset and size."""
        out = tmp_path / "out"
        assert main(["verify", "--config", self.write_config(tmp_path, "verify"), "--out", str(out)]) == 0
        report = json.loads((out / "verification.json").read_text())
        assert report["pass"] is True
        assert report["trials"] == 20
        assert {(r["preset"], r["m"]) for r in report["runs"]} == {
            ("extra", 3),
            ("nids", 3),
            ("extra", 10),
            ("nids", 10),
        }
        assert (out / "summary.md").exists()

    def test_verify_negative_control(self, tmp_path):
        """Test a tampered rate makes verify exit 2."""
        config = self.write_config(
            tmp_path, "verify", verify={"presets": ["nids"], "sizes": [10], "trials": 5, "lambda_scale": 0.5}
        )
        assert main(["verify", "--config", config, "--out", str(tmp_path / "out")]) == 2

    def test_tradeoff_point(self, tmp_path):
        """Test a single-point sweep."""
        out = tmp_path / "out"
        config = self.write_config(tmp_path, "tradeoff_point")
        assert main(["tradeoff", "--config", config, "--out", str(out)]) == 0
        with open(out / "tradeoff.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == TRADEOFF_COLUMNS
        assert rows[1][2:4] == ["1", "1"]

    def test_tradeoff_default_grid(self, tmp_path):
        """Test the default sweep without a config."""
        out = tmp_path / "out"
        assert main(["tradeoff", "--out", str(out)]) == 0
        assert len((out / "tradeoff.csv").read_text().splitlines()) == 362
        assert not (out / "end_to_end.json").exists()

    def test_config_errors(self, tmp_path, capsys):
        """Test unknown keys and missing files exit 1."""
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"colour": "blue"}))
        assert main(["run", "--config", str(bad)]) == 1
        assert "config-error" in capsys.readouterr().err
        assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
        assert "io-error" in capsys.readouterr().err

    def test_usage_errors(self):
        """Test argparse failures map to exit code 1."""
        assert main(["frobnicate"]) == 1
        assert main(["run", "--seed", "many"]) == 1
        assert main([]) == 1

    def test_version(self, capsys):
        """Test the version command."""
        assert main(["version"]) == 0
        assert __version__ in capsys.readouterr().out

    def test_parser_subcommands(self):
        """Test every subcommand takes --config, --out and --seed."""
        parser = build_parser()
        for command in ("run", "verify", "tradeoff"):
            args = parser.parse_args([command, "--config", "c.json", "--out", "o", "--seed", "4"])
            assert (args.command, args.config, args.out, args.seed) == (command, "c.json", "o", 4)

    def test_help_exits_zero(self, capsys):
        """Test --help returns 0."""
        with pytest.raises(SystemExit) as info:
            build_parser().parse_args(["--help"])
        assert info.value.code == 0
        assert main(["--help"]) == 0
