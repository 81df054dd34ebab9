"""
End-to-end runs of the command-line driver on a coarse grid.
"""

import json

import check_sinogram
import pytest

from sma import io
from sma.cli import run

COARSE = """
[grid]
epsilon = 0.02

[montecarlo]
n_null = 200
n_alt = 200

[scan]
bbox = [-0.45, 0.45, -0.55, 0.35]
"""


@pytest.fixture
def coarse_config(tmp_path):
    def write(extra="", name="coarse.toml"):
        path = tmp_path / name
        path.write_text(COARSE + extra)
        return str(path)

    return write


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    monkeypatch.delenv("SMA_OUT_DIR", raising=False)
    return tmp_path / "out"


class TestStages:
    def test_simulate_writes_artifacts(self, coarse_config, out_dir, capsys):
        assert run(["simulate", "--config", coarse_config(), "--out", str(out_dir)]) == 0
        stage = out_dir / "simulate"
        assert io.read_header(stage / "noisy.sma1")["n_alpha"] == 50
        first = (stage / "noisy.csv").read_text().splitlines()[0]
        assert first.startswith("# config_hash=") and first.endswith("seed=0")
        summary = json.loads((stage / "simulate.json").read_text())
        assert summary["results"]["shape"] == [50, 101]
        assert "✅ Simulation complete" in capsys.readouterr().out

    def test_inspect(self, coarse_config, out_dir, capsys):
        run(["simulate", "--config", coarse_config(), "--out", str(out_dir)])
        assert run(["inspect", str(out_dir / "simulate" / "clean.sma1")]) == 0
        assert "50 x 101" in capsys.readouterr().out

    def test_inspect_missing_file(self, tmp_path):
        assert run(["inspect", str(tmp_path / "absent.sma1")]) == 3

    def test_test1d_is_deterministic(self, coarse_config, out_dir):
        args = ["test1d", "--config", coarse_config("[test]\nstatistic = \"fu-linear\"\n"), "--out", str(out_dir)]
        assert run(args) == 0
        first = io.read_json_lines(out_dir / "test1d" / "test1d.jsonl")
        assert run(args) == 0
        second = io.read_json_lines(out_dir / "test1d" / "test1d.jsonl")
        assert first == second
        assert first[0]["gamma"] > 0

    def test_seed_changes_statistic(self, coarse_config, out_dir):
        config = coarse_config()
        run(["test2d", "--config", config, "--out", str(out_dir), "--seed", "1"])
        one = io.read_json_lines(out_dir / "test2d" / "test2d.jsonl")[0]
        run(["test2d", "--config", config, "--out", str(out_dir), "--seed", "2"])
        two = io.read_json_lines(out_dir / "test2d" / "test2d.jsonl")[0]
        assert one["f"] != two["f"]
        assert one["h"] == two["h"]

    def test_noiseless_statistic_equals_noncentrality(self, coarse_config, out_dir):
        extra = "[noise]\nsigma = 0.0\n\n[test]\nreference_sigma = 1.7320508075688772\n"
        assert run(["test2d", "--config", coarse_config(extra), "--out", str(out_dir)]) == 0
        record = io.read_json_lines(out_dir / "test2d" / "test2d.jsonl")[0]
        assert record["statistic"] == pytest.approx(record["mu"], rel=1e-12)
        assert record["reject"]
        assert record["f"] == pytest.approx(record["h"])

    def test_direct_path_agrees(self, coarse_config, out_dir):
        config = coarse_config()
        run(["test2d", "--config", config, "--out", str(out_dir / "fast")])
        run(["test2d", "--config", config, "--out", str(out_dir / "direct"), "--force-direct-path"])
        fast = io.read_json_lines(out_dir / "fast" / "test2d" / "test2d.jsonl")[0]
        direct = io.read_json_lines(out_dir / "direct" / "test2d" / "test2d.jsonl")[0]
        assert fast["statistic"] == pytest.approx(direct["statistic"], rel=1e-8)

    def test_roc_and_power_curve(self, coarse_config, out_dir):
        config = coarse_config("[test]\nstatistic = \"fu-linear\"\n")
        assert run(["roc", "--config", config, "--out", str(out_dir), "--threads", "2"]) == 0
        roc = json.loads((out_dir / "roc" / "roc.json").read_text())["results"]
        assert 0.5 <= roc["auc_theory"] <= 1.0
        assert abs(roc["auc_empirical"] - roc["auc_theory"]) < 0.1
        assert (out_dir / "roc" / "samples.parquet").exists()
        assert not (out_dir / "roc" / "gaussianity.csv").exists()

        assert run(["power-curve", "--config", config, "--out", str(out_dir)]) == 0
        table = io.read_table(out_dir / "power-curve" / "power_vs_sigma.csv")
        assert list(table["sigma"]) == [0.87, 1.73, 5.2, 34.6]
        assert table["power_2d"].is_monotonic_decreasing

    def test_binning_reduces_noise_in_power_curve(self, coarse_config, out_dir):
        config = coarse_config("[test]\nstatistic = \"fu-linear\"\n")
        binned = coarse_config("[noise]\nbinning = 2\n\n[test]\nstatistic = \"fu-linear\"\n", name="binned.toml")
        assert run(["power-curve", "--config", config, "--out", str(out_dir / "plain")]) == 0
        assert run(["power-curve", "--config", binned, "--out", str(out_dir / "binned")]) == 0
        plain = io.read_table(out_dir / "plain" / "power-curve" / "power_vs_sigma.csv")
        coarse = io.read_table(out_dir / "binned" / "power-curve" / "power_vs_sigma.csv")
        assert (coarse["power_1d"] > plain["power_1d"]).all()
        assert (coarse["auc_1d"] > plain["auc_1d"]).all()

    def test_directional_roc(self, coarse_config, out_dir):
        config = coarse_config("[test]\nstatistic = \"fu-sgn\"\nalternative = \"directional\"\n")
        assert run(["roc", "--config", config, "--out", str(out_dir)]) == 0
        roc = json.loads((out_dir / "roc" / "roc.json").read_text())["results"]
        assert roc["alternative"] == "directional"
        assert roc["auc_closed_form"] == pytest.approx(roc["auc_theory"], abs=2e-3)
        assert abs(roc["auc_empirical"] - roc["auc_theory"]) < 0.1


class TestFailures:
    def test_bad_config(self, tmp_path, out_dir):
        path = tmp_path / "bad.toml"
        path.write_text("[grid]\nepsilonn = 0.02\n")
        assert run(["simulate", "--config", str(path), "--out", str(out_dir)]) == 2

    def test_missing_config(self, tmp_path, out_dir):
        assert run(["simulate", "--config", str(tmp_path / "absent.toml"), "--out", str(out_dir)]) == 2

    def test_window_beyond_support(self, coarse_config, out_dir, capsys):
        extra = "[[phantom.disks]]\ncx = 0.9\ncy = 0.0\nradius = 0.05\n"
        assert run(["test2d", "--config", coarse_config(extra), "--out", str(out_dir)]) == 3
        assert "SupportError" in capsys.readouterr().out

    def test_zero_noise_without_reference(self, coarse_config, out_dir, capsys):
        assert run(["test2d", "--config", coarse_config("[noise]\nsigma = 0.0\n"), "--out", str(out_dir)]) == 1
        assert "SingularCovarianceError" in capsys.readouterr().out

    def test_unknown_figure(self):
        with pytest.raises(SystemExit):
            run(["repro", "fig99"])


class TestCheckSinogram:
    def test_summarizes_files(self, coarse_config, out_dir, capsys):
        run(["simulate", "--config", coarse_config(), "--out", str(out_dir)])
        files = [str(p) for p in sorted((out_dir / "simulate").glob("*.sma1"))]
        assert check_sinogram.main(files) == 0
        assert "✅ Checked 2 of 2 files" in capsys.readouterr().out

    def test_reports_unreadable_files(self, tmp_path):
        path = tmp_path / "junk.sma1"
        path.write_bytes(b"junk")
        assert check_sinogram.main([str(path)]) == 1
