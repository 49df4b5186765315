"""Experiment configuration files: YAML loading and schema validation.

A config is a key-value tree with shared top-level sections (``model``,
``integrator``, ``output``, ``seed``) and one section per subcommand.
Every key is checked against a schema before any run; unknown keys and
missing required keys raise :class:`~autoresonance.errors.ConfigError`
naming the offending path.
"""

from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .errors import ConfigError

__all__ = ["SCHEMA_VERSION", "COMMANDS", "OUT_ENV", "load_config", "validate_config", "resolve_out_dir"]

SCHEMA_VERSION = 1
COMMANDS = ("simulate", "asymptotics", "certify", "basin", "montecarlo", "duffing")
OUT_ENV = "AUTORESONANCE_OUT"

REQUIRED = object()


def _real(value, path):
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if isinstance(value, str):
        low = value.strip().lower()
        if low in ("inf", "+inf", "infinity", ".inf"):
            return math.inf
        if low in ("-inf", "-infinity", "-.inf"):
            return -math.inf
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if math.isnan(out):
        raise ConfigError(f"{path}: NaN is not allowed")
    return out


def _int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return int(value)


def _str(value, path):
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def _bool(value, path):
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true or false, got {value!r}")
    return value


def _real_list(value, path):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{path}: expected a list of numbers, got {value!r}")
    return [_real(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _pair(value, path):
    out = _real_list(value, path)
    if len(out) != 2:
        raise ConfigError(f"{path}: expected two numbers, got {len(out)}")
    return out


def _dist(value, path):
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a distribution mapping with a 'kind' key")
    return dict(value)  # checked by Distribution.from_dict when built


def _section(data, path: str, schema: Dict[str, Any], required: bool = True) -> Optional[dict]:
    """Validate one mapping against ``{key: (parser, default)}``."""
    if data is None:
        if required:
            raise ConfigError(f"missing required section '{path}'")
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - set(schema))
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {unknown}; allowed: {sorted(schema)}")
    out = {}
    for key, (parser, default) in schema.items():
        sub = f"{path}.{key}" if path else key
        if key in data and data[key] is not None:
            out[key] = parser(data[key], sub)
        elif default is REQUIRED:
            raise ConfigError(f"missing required key '{sub}'")
        else:
            out[key] = default
    return out


def _sub(schema, required=False):
    return lambda value, path: _section(value, path, schema, required)


MODEL = {"lambda": (_real, REQUIRED), "delta": (_real, REQUIRED), "f": (_real, REQUIRED)}
INTEGRATOR = {
    "method": (_str, "embedded_rk45"),
    "abs_tol": (_real, 1e-10),
    "rel_tol": (_real, 1e-10),
    "h_init": (_real, 1e-3),
    "h_max": (_real, 1.0),
    "max_steps": (_int, 2_000_000),
}
OUTPUT = {"dir": (_str, "out")}

PERTURBATION = {
    "kind": (_str, "none"),  # none | example1 | jump_train | single_jump
    "mu": (_real, 0.0),
    "N": (_int, 10),
    "jump": (_dist, {"kind": "uniform", "lo": -0.5, "hi": 0.5}),
    "omega": (_dist, {"kind": "uniform", "lo": 0.0, "hi": 1.0}),
    "offset": (_real, 0.0),
}

SECTIONS = {
    "simulate": {
        "initial": (_pair, None),
        "start_on_reference": (_bool, False),
        "offset": (_pair, [0.0, 0.0]),
        "tau0": (_real, 0.01),
        "horizon": (_real, 100.0),
        "epsilon": (_real, math.inf),
        "ref_order": (_int, 1),
        "norm": (_str, "tau"),
        "perturbation": (_sub(PERTURBATION), None),
    },
    "asymptotics": {
        "branch": (_str, "minus"),
        "order": (_int, 1),
        "taus": (_real_list, [1e2, 3e2, 1e3, 3e3, 1e4]),
        "precision": (_int, None),
    },
    "certify": {
        "ref_order": (_int, 1),
        "rho_max": (_real, 0.4),
        "tau_min": (_real, 10.0),
        "tau_max": (_real, 1e5),
        "n_angle": (_int, 64),
        "n_rho": (_int, 64),
        "n_tau": (_int, 32),
        "max_rounds": (_int, 8),
    },
    "basin": {
        "r_min": (_real, 0.0),
        "r_max": (_real, 2.0),
        "n_r": (_int, 21),
        "psi_min": (_real, 0.0),
        "psi_max": (_real, 2 * math.pi),
        "n_psi": (_int, 21),
        "points": (lambda v, p: [_pair(x, f"{p}[{i}]") for i, x in enumerate(v)], None),
        "tau_max": (_real, 100.0),
        "tau_init": (_real, 0.01),
        "ratio_lo": (_real, 0.8),
        "ratio_hi": (_real, 1.2),
        "phase_window": (_real, math.pi / 2),
    },
    "montecarlo": {
        "n_trials": (_int, REQUIRED),
        "mu": (_real, REQUIRED),
        "kappa": (_real, REQUIRED),
        "epsilon": (_real, REQUIRED),
        "tau0": (_real, REQUIRED),
        "ref_order": (_int, 1),
        "norm": (_str, "tau"),
        "initial_offset": (_pair, [0.0, 0.0]),
        "perturbation": (_sub(PERTURBATION, required=True), REQUIRED),
    },
    "duffing": {
        "beta": (_real, REQUIRED),
        "gamma": (_real, REQUIRED),
        "eps": (_real, REQUIRED),
        "alpha": (_real, REQUIRED),
        "horizon_t": (_real, REQUIRED),
        "x0": (_real, 1e-3),
        "v0": (_real, 0.0),
        "samples_per_period": (_int, 64),
    },
}

NEEDS_MODEL = {"simulate", "asymptotics", "certify", "basin", "montecarlo"}


def validate_config(raw: Any, command: str) -> dict:
    """Return the fully resolved config tree for ``command`` (defaults filled in)."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a mapping at the top level")
    top = {
        "schema_version": (_int, SCHEMA_VERSION),
        "command": (_str, command),
        "seed": (_int, 0),
        "output": (_sub(OUTPUT), None),
        "model": (lambda v, p: _section(v, p, MODEL), None),
        "integrator": (_sub(INTEGRATOR), None),
        command: (_sub(SECTIONS[command]), None),
    }
    others = sorted(set(raw) & (set(COMMANDS) - {command}))
    if others:
        raise ConfigError(f"config has section(s) {others} that do not belong to command '{command}'")
    cfg = _section(raw, "", top)
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {cfg['schema_version']}; expected {SCHEMA_VERSION}")
    if cfg["command"] != command:
        raise ConfigError(f"config is for command '{cfg['command']}', not '{command}'")
    if command in NEEDS_MODEL and cfg["model"] is None:
        raise ConfigError("missing required section 'model' (keys: lambda, delta, f)")
    for key, schema in (("output", OUTPUT), ("integrator", INTEGRATOR), (command, SECTIONS[command])):
        if cfg[key] is None:
            cfg[key] = _section({}, key, schema, required=False)
    if command == "simulate":
        sec = cfg["simulate"]
        if sec["perturbation"] is None:
            sec["perturbation"] = _section({}, "simulate.perturbation", PERTURBATION, required=False)
        if sec["initial"] is None and not sec["start_on_reference"]:
            raise ConfigError("simulate needs either 'initial: [r, psi]' or 'start_on_reference: true'")
    return cfg


def load_config(path, command: str) -> dict:
    """Read a YAML file and validate it for ``command``.

    Raises ``OSError`` if the file cannot be read and ``ConfigError`` if it
    does not parse or does not match the schema.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    if raw is None:
        raw = {}
    return validate_config(raw, command)


def resolve_out_dir(cli_out: Optional[str], cfg: dict) -> Path:
    """``--out`` wins, then the ``AUTORESONANCE_OUT`` environment variable, then ``output.dir``."""
    if cli_out:
        return Path(cli_out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    return Path(cfg["output"]["dir"])
