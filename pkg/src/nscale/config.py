"""Experiment configuration: YAML files validated against a JSON schema."""
from __future__ import annotations

import copy
import hashlib
import json
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .errors import ConfigError
from .potential import V0_CATALOG, V1_CATALOG

DEFAULTS = {
    "name": "experiment",
    "seed": 0,
    "output": None,
    "workers": 1,
    "epsilons": [0.5, 0.25, 0.125],
    "solver": {"torus_n": None, "tol": 1e-10, "scheme": "spectral", "max_iter": 5000,
               "x_nodes": None, "box": None, "max_dN": 6},
    "sde": {"T": 1.0, "n_paths": 10000, "dt": None, "dt_homog": 1e-3, "stability_c": 0.05,
            "chunk": 16384, "full": True, "homogenized": True, "dump_terminal": False,
            "initial": {"kind": "point", "mean": 0.0, "std": 1.0}},
    "analysis": {"weak_convergence": True, "tv_kl": False, "tv_kl_epsilon": 0.02, "k_curve": False,
                 "spectral_gap": False, "spectral_gap_epsilon": 0.1, "muckenhoupt": False,
                 "muckenhoupt_alpha": 0.5, "muckenhoupt_epsilon": 0.2, "muckenhoupt_n": 6,
                 "nodes_per_period": 32, "box": None},
    "bounds": {"n_random": 8, "tol": 1e-8, "floor_points": 16},
}


def schema():
    text = resources.files("nscale").joinpath("config_schema.json").read_text()
    return json.loads(text)


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(raw: dict) -> dict:
    """Schema check, catalog check and solver-size limits; returns the filled config."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    try:
        jsonschema.validate(raw, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    cfg = _merge(DEFAULTS, raw)
    pot = cfg["potential"]
    pot.setdefault("V0", {"name": "quadratic"})
    if pot["V0"]["name"] not in V0_CATALOG:
        raise ConfigError(f"unknown V0 form {pot['V0']['name']!r}; known: {sorted(V0_CATALOG)}")
    if pot["V1"]["name"] not in V1_CATALOG:
        raise ConfigError(f"unknown V1 form {pot['V1']['name']!r}; known: {sorted(V1_CATALOG)}")
    dN = pot["dim"] * pot["n_scales"]
    if dN > cfg["solver"]["max_dN"]:
        raise ConfigError(f"d*N = {dN} exceeds the solver limit {cfg['solver']['max_dN']}")
    tn = cfg["solver"]["torus_n"]
    if isinstance(tn, list) and len(tn) != pot["n_scales"]:
        raise ConfigError("solver.torus_n needs one entry per fast scale")
    return cfg


def load(path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return validate(raw or {})


def apply_overrides(raw: dict, assignments) -> dict:
    """Apply ``dotted.key=value`` overrides; values are parsed as YAML scalars."""
    out = copy.deepcopy(raw)
    for item in assignments or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        node = out
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-mapping")
        node[parts[-1]] = yaml.safe_load(text)
    return out


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def load_raw(path) -> dict:
    p = Path(path)
    try:
        return yaml.safe_load(p.read_text()) or {}
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
