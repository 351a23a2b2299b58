import json
import os

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from app import cli

TINY = {
    "name": "tiny",
    "seed": 3,
    "shape": {"name": "disk", "n_points": 64, "transform": {"z": [0.2, -0.1], "s": 1.2, "theta": 0.5}},
    "targets": ["disk", "ellipse"],
    "acquisition": {"R": 3.0, "Ns": 16, "Nr": 16},
    "frequencies": {"omega_min": np.pi, "omega_max": 1.5 * np.pi, "n_freq": 1},
    "noise": {"sigma0": 0.1, "sweep": [0.1, 0.2]},
    "reconstruction": {"K": 4, "method": "pinv", "orders": [2, 4], "truth_order": 6},
    "dictionary": {"shapes": ["disk", "ellipse"], "n_dict_freq": 4, "n_scales": 7, "Nv": 16, "K": 4},
    "spectrum": {"omega": np.pi, "full_orders": [3], "limited_orders": [2],
                 "limited_aperture": np.pi / 2, "limited_groups": 4},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(dict(TINY, output_dir=str(tmp_path / "out"))))
    return str(path)


def invoke(*args):
    result = CliRunner().invoke(cli, list(args))
    assert result.exit_code == 0, result.output
    return result


def test_spectrum(config_path, tmp_path):
    invoke("spectrum", "--config", config_path)
    out = tmp_path / "out"
    values = pd.read_csv(out / "singular_values.csv")
    assert set(values["view"]) == {"full", "limited"}
    assert len(values[values["view"] == "full"]) == 7 * 7
    conditions = pd.read_csv(out / "condition_numbers.csv")
    assert conditions["condition"].min() >= 1.0
    assert json.loads((out / "manifest.json").read_text())["command"] == "spectrum"


def test_simulate_is_reproducible(config_path, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    invoke("simulate", "--config", config_path, "--out", str(first))
    invoke("simulate", "--config", config_path, "--out", str(second))
    summary = pd.read_csv(first / "msr_summary.csv")
    assert len(summary) == 2
    assert (first / "boundary.json").read_bytes() == (second / "boundary.json").read_bytes()
    for name in ("msr_0000.json", "msr_0000.values.npy", "msr_0001.values.npy", "msr_0001.mask.npy"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_seed_override_changes_noise(config_path, tmp_path):
    invoke("simulate", "--config", config_path, "--out", str(tmp_path / "a"))
    invoke("simulate", "--config", config_path, "--out", str(tmp_path / "b"), "--seed", "4")
    a = np.load(tmp_path / "a" / "msr_0000.values.npy")
    b = np.load(tmp_path / "b" / "msr_0000.values.npy")
    assert not np.array_equal(a, b)


def test_full_pipeline(config_path, tmp_path):
    out = tmp_path / "out"
    invoke("simulate", "--config", config_path)
    invoke("reconstruct", "--config", config_path)
    report = pd.read_csv(out / "reconstruction_report.csv")
    assert len(report) == 2
    assert np.isfinite(report["relative_error"]).all()
    curves = pd.read_csv(out / "error_vs_order.csv")
    assert set(curves["K"]) == {2, 4}
    assert os.path.exists(out / "w_0000.values.npy")

    invoke("build-dict", "--config", config_path)
    assert (out / "dictionary" / "manifest.json").exists()
    assert len(pd.read_csv(out / "dictionary_integrated_descriptor.csv")) == 2 * 5

    invoke("identify", "--config", config_path, "--threads", "2")
    result = json.loads((out / "identification.json").read_text())
    assert result["total"] == 2
    assert set(result["results"]) == {"disk", "ellipse"}
    scales = pd.read_csv(out / "scale_errors.csv")
    assert list(scales.columns) == ["target", "identified_as", "correct", "estimated_scale",
                                    "true_scale", "scale_error"]


def test_identify_without_dictionary_fails(config_path):
    result = CliRunner().invoke(cli, ["identify", "--config", config_path])
    assert result.exit_code == 1
    assert "build-dict" in result.output


def test_reconstruct_without_simulation_fails(config_path):
    result = CliRunner().invoke(cli, ["reconstruct", "--config", config_path])
    assert result.exit_code == 1
    assert "simulate" in result.output


def test_invalid_config_is_reported(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"acquisition": {"Ns": 0}}))
    result = CliRunner().invoke(cli, ["spectrum", "--config", str(path)])
    assert result.exit_code == 1
    assert "acquisition" in result.output
