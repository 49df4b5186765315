import math

import pytest

from autoresonance.config import COMMANDS, OUT_ENV, load_config, resolve_out_dir, validate_config
from autoresonance.errors import ConfigError

MODEL = {"lambda": 1.0, "delta": 0.5, "f": 0.2}


def test_defaults_filled():
    cfg = validate_config({"model": MODEL, "certify": {}}, "certify")
    assert cfg["certify"]["n_angle"] == 64 and cfg["certify"]["max_rounds"] == 8
    assert cfg["integrator"]["method"] == "embedded_rk45"
    assert cfg["output"]["dir"] == "out"
    assert cfg["seed"] == 0 and cfg["schema_version"] == 1


def test_missing_model_key_named():
    with pytest.raises(ConfigError, match="model.lambda"):
        validate_config({"model": {"delta": 0.5, "f": 0.2}}, "asymptotics")


def test_missing_model_section():
    with pytest.raises(ConfigError, match="model"):
        validate_config({}, "basin")


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="tau_maximum"):
        validate_config({"model": MODEL, "basin": {"tau_maximum": 5}}, "basin")


def test_foreign_section_rejected():
    with pytest.raises(ConfigError, match="do not belong"):
        validate_config({"model": MODEL, "basin": {}}, "certify")


def test_type_errors():
    with pytest.raises(ConfigError):
        validate_config({"model": {**MODEL, "delta": "half"}}, "asymptotics")
    with pytest.raises(ConfigError):
        validate_config({"model": MODEL, "basin": {"n_r": 2.5}}, "basin")
    with pytest.raises(ConfigError):
        validate_config({"model": MODEL, "asymptotics": {"order": True}}, "asymptotics")


def test_infinite_string():
    cfg = validate_config({"model": MODEL, "simulate": {"initial": [1, 1], "epsilon": "inf"}}, "simulate")
    assert cfg["simulate"]["epsilon"] == math.inf


def test_simulate_needs_start():
    with pytest.raises(ConfigError, match="initial"):
        validate_config({"model": MODEL, "simulate": {}}, "simulate")
    cfg = validate_config({"model": MODEL, "simulate": {"start_on_reference": True}}, "simulate")
    assert cfg["simulate"]["perturbation"]["kind"] == "none"


def test_montecarlo_required():
    with pytest.raises(ConfigError, match="montecarlo.perturbation"):
        validate_config({"model": MODEL, "montecarlo": {"n_trials": 1, "mu": 0.1, "kappa": 0.5, "epsilon": 0.1, "tau0": 5}}, "montecarlo")


def test_schema_version_and_command():
    with pytest.raises(ConfigError, match="schema_version"):
        validate_config({"schema_version": 2, "model": MODEL}, "asymptotics")
    with pytest.raises(ConfigError, match="command"):
        validate_config({"command": "basin", "model": MODEL}, "asymptotics")
    with pytest.raises(ConfigError):
        validate_config([1, 2], "asymptotics")
    with pytest.raises(ConfigError):
        validate_config({}, "plot")


def test_load_errors(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.yaml", "basin")
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: [unclosed\n")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(bad, "basin")


@pytest.mark.parametrize("command", COMMANDS)
def test_shipped_configs_validate(command):
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / f"{command}.yaml"
    cfg = load_config(path, command)
    assert cfg["schema_version"] == 1


def test_out_dir_precedence(monkeypatch):
    cfg = {"output": {"dir": "from_config"}}
    monkeypatch.delenv(OUT_ENV, raising=False)
    assert str(resolve_out_dir(None, cfg)) == "from_config"
    monkeypatch.setenv(OUT_ENV, "from_env")
    assert str(resolve_out_dir(None, cfg)) == "from_env"
    assert str(resolve_out_dir("from_flag", cfg)) == "from_flag"
