from pathlib import Path

import pytest

from vhed.config import ConfigError, dump_config, from_dict, load_config

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.yaml"))


def test_defaults():
    cfg = from_dict({})
    assert cfg.kgrid.R == 60.0 and cfg.kgrid.n_tau == 128 and cfg.boundary.n_b == 64
    assert cfg.averaging.calibration == -0.5
    assert cfg.kgrid_obj().window == "blackman"


@pytest.mark.parametrize("path", CONFIGS, ids=[p.stem for p in CONFIGS])
def test_shipped_configs_load(path):
    cfg = load_config(path)
    cfg.phantom_spec()


def test_round_trip(tmp_path):
    cfg = from_dict({"grid": {"exponent": 6}, "workers": 2,
                     "phantom": {"name": "circle-rho", "params": {"rho": 0.3}}})
    back = load_config(dump_config(cfg, tmp_path / "c.yaml"))
    assert back.to_dict() == cfg.to_dict()


def test_explicit_inclusions():
    cfg = from_dict({"phantom": {"name": None, "background": {"amplitude": 0.2},
                                 "inclusions": [{"kind": "disc", "offset": 0.5,
                                                 "center": [0.1, 0.2], "radius": 0.3}]}})
    spec = cfg.phantom_spec()
    assert spec.background.amplitude == 0.2
    assert spec.inclusions[0].center == 0.1 + 0.2j


@pytest.mark.parametrize("data", [
    {"grid": {"sidehalf": 2.0}},
    {"bogus": 1},
    {"grid": {"exponent": "eight"}},
    {"grid": {"exponent": 2.5}},
    {"solver": {"warm_start": "yes"}},
    {"kgrid": {"window": "kaiser"}},
    {"kgrid": {"n_tau": 100}},
    {"averaging": {"calibration": "guess"}},
    {"reconstruction": {"route": "art"}},
    {"predict": {"orders": [7]}},
    {"outputs": {"formats": ["tiff"]}},
    {"phantom": {"name": "nope"}},
    {"phantom": {"name": None, "inclusions": [{"kind": "disc", "offset": 1, "radius": 2}]}},
    {"workers": 0},
    {"grid": [1, 2]},
])
def test_invalid_configs(data):
    with pytest.raises(ConfigError):
        from_dict(data)


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(bad)
