from pathlib import Path

import numpy as np
import pytest
import yaml

from vhed import cli, io
from vhed.beltrami import SolverError
from vhed.verify import CriterionResult

SMOKE = Path(__file__).parent.parent / "configs" / "smoke.yaml"


def _config(tmp_path, **overrides):
    data = yaml.safe_load(SMOKE.read_text())
    data["outputs"] = {"formats": ["vhed", "csv", "pgm"]}
    data.update(overrides)
    p = tmp_path / "run.yaml"
    p.write_text(yaml.safe_dump(data))
    return p


def _run(cmd, cfg, out, *extra):
    return cli.main([cmd, "--config", str(cfg), "--out", str(out), *extra])


@pytest.fixture(scope="module")
def smoke_run(tmp_path_factory):
    """Every subcommand in pipeline order on the seconds-scale config."""
    tmp = tmp_path_factory.mktemp("smoke")
    cfg = _config(tmp)
    out = tmp / "out"
    codes = {cmd: _run(cmd, cfg, out) for cmd in
             ("phantom", "sweep", "sinogram", "reconstruct", "neumann", "predict")}
    return codes, out, cfg


def test_subcommands_succeed_and_write_outputs(smoke_run):
    codes, out, _ = smoke_run
    assert all(c == cli.EXIT_OK for c in codes.values()), codes
    for name in ("config.snapshot.yaml", "sigma.vhed", "mu.pgm", "cube_plus.vhed",
                 "cube_minus.vhed", "iterations_plus.csv", "sino_odd.vhed", "sino_even.csv",
                 "peaks_phi0.csv", "sigma_fbp.vhed", "term1_plus.vhed", "term2_minus.vhed",
                 "term_peaks.csv", "ladders.csv"):
        assert (out / name).exists(), name


def test_stored_sinogram_carries_calibration(smoke_run):
    _, out, _ = smoke_run
    arr = io.read_array(out / "sino_odd.vhed", expect_dtype=np.complex128, expect_calibration=-0.5)
    assert arr.data.shape == (16, 4)
    assert arr.metadata["sign"] == "odd"


def test_rerun_is_deterministic(smoke_run, tmp_path):
    _, out, cfg = smoke_run
    again = tmp_path / "again"
    assert _run("sweep", cfg, again) == cli.EXIT_OK
    assert _run("sinogram", cfg, again, "--workers", "2") == cli.EXIT_OK
    for name in ("cube_plus.vhed", "sino_odd.vhed"):
        assert (again / name).read_bytes() == (out / name).read_bytes()


def test_constant_conductivity_reconstructs_to_one(tmp_path):
    cfg = _config(tmp_path, phantom={"name": None})
    assert _run("reconstruct", cfg, tmp_path / "out") == cli.EXIT_OK
    sigma = io.read_array(tmp_path / "out" / "sigma_fbp.vhed").data
    assert np.abs(sigma - 1).max() <= 1e-6


def test_config_errors_exit_one(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: {exponent: eight}\n")
    assert _run("phantom", bad, tmp_path / "o") == cli.EXIT_CONFIG
    assert _run("phantom", tmp_path / "missing.yaml", tmp_path / "o") == cli.EXIT_CONFIG
    assert _run("phantom", _config(tmp_path), tmp_path / "o", "--workers", "0") == cli.EXIT_CONFIG


def test_compute_failure_exits_two(tmp_path, monkeypatch):
    def fail(*args, **kwargs):
        raise SolverError("no convergence")

    monkeypatch.setattr(cli, "full_sinograms", fail)
    assert _run("sweep", _config(tmp_path), tmp_path / "o") == cli.EXIT_COMPUTE


def test_predict_without_interfaces_exits_two(tmp_path):
    cfg = _config(tmp_path, phantom={"name": "radial-smooth"})
    assert _run("predict", cfg, tmp_path / "o") == cli.EXIT_COMPUTE


def test_corrupt_stored_cube_exits_two(tmp_path):
    cfg = _config(tmp_path)
    out = tmp_path / "o"
    out.mkdir()
    (out / "cube_plus.vhed").write_bytes(b"junk")
    (out / "cube_minus.vhed").write_bytes(b"junk")
    assert _run("sinogram", cfg, out) == cli.EXIT_COMPUTE


def test_verify_failure_exits_three(tmp_path, monkeypatch, capsys):
    import vhed.verify as verify

    def fake(ctx, only=None):
        return [CriterionResult(1, "ok", True, "fine"),
                CriterionResult(2, "broken", False, "off by a lot")]

    monkeypatch.setattr(verify, "run_all", fake)
    assert _run("verify", _config(tmp_path), tmp_path / "o") == cli.EXIT_VERIFY
    printed = capsys.readouterr().out
    assert "[PASS] 1. ok" in printed and "[FAIL] 2. broken" in printed
    assert (tmp_path / "o" / "verify.txt").exists()
