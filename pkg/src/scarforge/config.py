"""TOML experiment configs: defaults, schema validation, CLI overrides.

A config is a TOML file with a top-level ``pipeline`` key and a ``params``
table; unknown keys and wrong types are reported with their field paths.
All physical parameters are dimensionless.
"""

from __future__ import annotations

from pathlib import Path

import tomli


class ConfigError(ValueError):
    pass


_NUM = (int, float)
# field -> (type tuple, element type for lists or None)
_SCHEMAS = {
    "overlap-table": {
        "beta_min": (_NUM, None), "beta_max": (_NUM, None),
        "beta_step": (_NUM, None), "tol": (_NUM, None),
        "internal_cap": (int, None),
    },
    "dyson-order": {
        "q": (list, _NUM), "l_list": (list, int),
        "hbar_list": (list, _NUM), "t": (_NUM, None),
    },
    "width-scan": {
        "q": (list, _NUM), "lambda": (_NUM, None),
        "hbar_list": (list, _NUM), "epsilon_prime": (_NUM, None),
        "method": (str, None),
    },
    "cdvp-scan": {
        "hbar_list": (list, _NUM), "theta": (_NUM, None),
        "cutoff_radius": (_NUM, None),
    },
    "scar-weight": {
        "hbar_list": (list, _NUM), "epsilon_prime": (_NUM, None),
        "epsilon": (_NUM, None), "n_grid": (int, None),
    },
    "optimize-cutoff": {
        "epsilon_prime_list": (list, _NUM), "grid_size": (int, None),
    },
}

DEFAULTS = {
    "overlap-table": {"beta_min": -4.0, "beta_max": 4.0, "beta_step": 0.1,
                      "tol": 1e-8},
    "dyson-order": {"q": [1.0, 0.5], "l_list": [1, 2],
                    "hbar_list": [1e-2, 1e-3, 1e-4, 1e-5], "t": 1.0},
    "width-scan": {"q": [1.0], "hbar_list": [1e-2, 1e-3, 1e-4],
                   "epsilon_prime": 0.1, "method": "fock"},
    "cdvp-scan": {"hbar_list": [1e-2, 1e-3, 1e-4, 1e-5], "theta": 0.0,
                  "cutoff_radius": 1.0},
    "scar-weight": {"hbar_list": [1.0 / 200.0], "epsilon_prime": 0.1,
                    "epsilon": 0.5},
    "optimize-cutoff": {"epsilon_prime_list": [0.05, 0.1, 0.2],
                        "grid_size": 4097},
}


def _validate(pipeline, params):
    schema = _SCHEMAS[pipeline]
    for key, val in params.items():
        if key not in schema:
            raise ConfigError(f"params.{key}: unknown field for {pipeline}")
        tp, elem = schema[key]
        if tp is list:
            if not isinstance(val, list) or not val:
                raise ConfigError(f"params.{key}: expected a non-empty list")
            for i, item in enumerate(val):
                if not isinstance(item, elem) or isinstance(item, bool):
                    raise ConfigError(
                        f"params.{key}[{i}]: expected {getattr(elem, '__name__', elem)}")
        elif not isinstance(val, tp) or isinstance(val, bool):
            raise ConfigError(f"params.{key}: wrong type {type(val).__name__}")
    return params


def load_config(pipeline, path=None, overrides=None):
    """Merged params for a pipeline: defaults <- file <- CLI overrides."""
    if pipeline not in _SCHEMAS:
        raise ConfigError(f"unknown pipeline {pipeline!r}")
    params = dict(DEFAULTS[pipeline])
    if path is not None:
        with open(Path(path), "rb") as fh:
            doc = tomli.load(fh)
        file_pipe = doc.get("pipeline", pipeline)
        if file_pipe != pipeline:
            raise ConfigError(
                f"pipeline: config file is for {file_pipe!r}, not {pipeline!r}")
        params.update(doc.get("params", {}))
    if overrides:
        params.update(overrides)
    return _validate(pipeline, params)


def apply_cli_overrides(pipeline, args):
    """Translate the scalar CLI flags into params overrides."""
    out = {}
    if args.hbar is not None:
        out["hbar_list"] = [args.hbar]
    if args.epsilon is not None:
        out["epsilon"] = args.epsilon
    if args.epsilon_prime is not None:
        if pipeline == "optimize-cutoff":
            out["epsilon_prime_list"] = [args.epsilon_prime]
        else:
            out["epsilon_prime"] = args.epsilon_prime
    if getattr(args, "lam", None) is not None:
        out["q"] = [args.lam]
    if args.order is not None:
        out["l_list"] = [args.order]
    if args.dim is not None:
        if pipeline == "scar-weight":
            out["n_grid"] = args.dim
        elif pipeline == "optimize-cutoff":
            out["grid_size"] = args.dim
        else:
            out["internal_cap"] = args.dim
    return {k: v for k, v in out.items() if k in _SCHEMAS[pipeline]}
