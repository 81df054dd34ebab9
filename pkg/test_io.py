"""
Tests for artifact files: SMA1 sinograms, provenance tables, PGM images,
Parquet sample sets and JSON outputs.
"""

import json

import numpy as np
import pandas as pd
import pytest

from sma import io
from sma.errors import DimensionError, PreconditionError
from sma.montecarlo import SampleSet


class TestSinogramFiles:
    def test_round_trip(self, tmp_path, noisy_data):
        sinogram = noisy_data.select("full")
        path = io.write_sinogram(tmp_path / "nested" / "noisy.sma1", sinogram)
        loaded = io.read_sinogram(path)
        np.testing.assert_array_equal(loaded.values, sinogram.values)
        assert loaded.grid.shape == sinogram.grid.shape
        assert loaded.grid.epsilon == pytest.approx(sinogram.grid.epsilon)
        assert loaded.grid.kappa == pytest.approx(sinogram.grid.kappa)
        np.testing.assert_allclose(loaded.grid.ps, sinogram.grid.ps)

    def test_header(self, tmp_path, clean_sinogram):
        path = io.write_sinogram(tmp_path / "clean.sma1", clean_sinogram)
        header = io.read_header(path)
        assert (header["n_alpha"], header["n_p"]) == (50, 101)
        assert header["d_alpha"] == pytest.approx(2 * np.pi * 0.02)
        assert path.stat().st_size == io.HEADER.size + 50 * 101 * 8

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.sma1"
        path.write_bytes(b"XXXX" + bytes(io.HEADER.size))
        with pytest.raises(PreconditionError, match="magic"):
            io.read_sinogram(path)

    def test_short_file(self, tmp_path):
        path = tmp_path / "short.sma1"
        path.write_bytes(b"SMA1")
        with pytest.raises(PreconditionError, match="too short"):
            io.read_header(path)

    def test_value_count_checked(self, tmp_path, clean_sinogram):
        path = io.write_sinogram(tmp_path / "clean.sma1", clean_sinogram)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DimensionError):
            io.read_sinogram(path)

    def test_summary(self, tmp_path, clean_sinogram):
        path = io.write_sinogram(tmp_path / "clean.sma1", clean_sinogram)
        summary = io.summarize_sinogram(path)
        assert summary["kappa"] == pytest.approx(2 * np.pi)
        assert summary["max"] == pytest.approx(clean_sinogram.values.max())
        assert summary["min"] == 0.0
        assert 0 < summary["nonzero"] < 50 * 101


class TestTables:
    def test_header_line(self, tmp_path):
        frame = pd.DataFrame({"a": [1, 2], "b": [0.5, 1.5]})
        path = io.write_table(tmp_path / "t.csv", frame, io.header_line("abc123", 4))
        first = path.read_text().splitlines()[0]
        assert first == "# config_hash=abc123 seed=4"
        loaded = io.read_table(path)
        assert list(loaded.columns) == ["a", "b"]
        assert loaded["b"].tolist() == [0.5, 1.5]

    def test_sinogram_frame(self, clean_sinogram):
        frame = io.sinogram_frame(clean_sinogram)
        assert len(frame) == 50 * 101
        assert frame.loc[0, "k"] == clean_sinogram.grid.k_min
        assert frame.loc[0, "alpha"] == pytest.approx(-np.pi)
        assert frame["value"].max() == pytest.approx(clean_sinogram.values.max())


class TestImages:
    def test_pgm_orientation(self, tmp_path):
        values = np.arange(6, dtype=float).reshape(3, 2)
        path = io.write_pgm(tmp_path / "img.pgm", values, "# config_hash=x seed=0")
        data = path.read_bytes()
        assert data.startswith(b"P5\n3 2\n65535\n")
        body = np.frombuffer(data.split(b"\n", 3)[3], dtype=">u2").reshape(2, 3)
        # top row holds the largest y
        np.testing.assert_array_equal(body[0], np.rint(values[:, 1] / 5.0 * 65535))
        sidecar = json.loads(path.with_suffix(".json").read_text())
        assert sidecar["min"] == 0.0 and sidecar["max"] == 5.0
        assert sidecar["provenance"] == "config_hash=x seed=0"

    def test_pgm_round_trip(self, tmp_path, rng):
        values = rng.normal(size=(7, 5))
        path = io.write_pgm(tmp_path / "noise.pgm", values)
        span = values.max() - values.min()
        np.testing.assert_allclose(io.read_pgm(path), values, atol=span / 65535)

    def test_constant_image(self, tmp_path):
        path = io.write_pgm(tmp_path / "flat.pgm", np.ones((4, 4)))
        np.testing.assert_allclose(io.read_pgm(path), 1.0)


class TestSamplesAndJson:
    def test_parquet_provenance(self, tmp_path, rng):
        samples = SampleSet(
            rng.normal(size=(150, 2)),
            rng.normal(size=(120, 2)),
            np.array([1.0, 0.0]),
            {"spec_hash": "feedbeef", "seed": 3, "statistic": "f2d"},
        )
        path = io.write_samples(tmp_path / "samples.parquet", samples, "cafe")
        frame, provenance = io.read_samples(path)
        assert provenance == {"config_hash": "cafe", "seed": "3", "spec_hash": "feedbeef", "statistic": "f2d"}
        assert list(frame.columns) == ["arm", "f1", "f2"]
        assert (frame["arm"] == "null").sum() == 150
        np.testing.assert_allclose(frame.loc[frame["arm"] == "alt", "f2"], samples.alt_samples[:, 1])

    def test_json_numpy_values(self, tmp_path):
        path = io.write_json(
            tmp_path / "summary.json", {"x": np.float64(1.5), "n": np.int64(3), "v": np.arange(2), "ok": np.bool_(True)}
        )
        assert json.loads(path.read_text()) == {"n": 3, "ok": True, "v": [0, 1], "x": 1.5}

    def test_json_rejects_unknown_types(self, tmp_path):
        with pytest.raises(TypeError):
            io.write_json(tmp_path / "bad.json", {"value": object()})

    def test_json_lines(self, tmp_path):
        records = [{"z": np.float64(2.0), "reject": np.bool_(False)}, {"z": 7.0, "reject": True}]
        path = io.write_json_lines(tmp_path / "tests.jsonl", records, io.header_line("h", 1))
        assert path.read_text().startswith("# config_hash=h seed=1\n")
        assert io.read_json_lines(path) == [{"reject": False, "z": 2.0}, {"reject": True, "z": 7.0}]