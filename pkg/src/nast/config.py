"""Experiment configuration: schema validation, defaults and stable hashing.

Configs are YAML mappings.  Every key is checked against a fixed schema;
unknown keys and wrong types raise ``ConfigError`` with the dotted key
path.  The hash is taken over the canonical JSON of the validated config,
so it does not depend on key order or formatting.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import yaml

SCHEMA_VERSION = 1

__all__ = ["ConfigError", "SCHEMA_VERSION", "load_config", "validate_config", "config_hash", "TARGETS"]

TARGETS = ("clt", "nonclt", "slope", "fbm-invariance", "energy", "deformation", "constants")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


_NUM = (int, float)

# key -> (types, required, default); nested dicts are sub-schemas
SCHEMA = {
    "schema": ((int,), True, None),
    "name": ((str,), True, None),
    "description": ((str,), False, ""),
    "target": ((str,), True, None),
    "model": {
        "kind": ((str,), True, None),
        "c1": (_NUM, False, 1.0),
        "beta1": (_NUM, False, None),
        "beta2": (_NUM, False, None),
        "c2": (_NUM, False, 1.0),
        "H": (_NUM, False, None),
    },
    "wavelet": {
        "name": ((str,), True, None),
        "K": ((int,), False, None),
        "alpha": (_NUM, False, None),
        "gamma": (_NUM, False, None),
        "w0": (_NUM, False, None),
    },
    "activations": ((list,), False, ["modulus", "modulus"]),
    "scales": {
        "j1": ((list,), False, [1]),
        "j2": (_NUM, False, 10),
        "js": ((list,), False, None),
        "first": ((list,), False, None),
        "J": ((list,), False, [6]),
        "order": ((int,), False, 2),
    },
    "ensemble": {
        "paths": ((int,), False, 100),
        "length": ((int,), False, 2**21),
        "dt": (_NUM, False, 1.0),
        "seed": ((int,), False, 0),
    },
    "analysis": {
        "reference": ((str,), False, None),
        "alpha": (_NUM, False, 0.01),
        "reject_normal_below": (_NUM, False, None),
        "slope": (_NUM, False, None),
        "slope_tol": (_NUM, False, 0.05),
        "jrange": ((list,), False, [6, 10]),
        "first_slope": (_NUM, False, None),
        "first_range": ((list,), False, None),
        "intercept_tol": (_NUM, False, 0.10),
        "z": (_NUM, False, 3.0),
        "spacing": ((int,), False, None),
        "shift": ((int,), False, 1),
        "ratio_max": (_NUM, False, None),
        "expect": ((str,), False, None),
        "contrast": ((dict,), False, None),
        "lags": ((list,), False, [0.0, 0.5, 1.0, 2.0, 8.0]),
        "variance_tol": (_NUM, False, 0.05),
    },
    "output": {
        "dir": ((str,), False, "results"),
        "save_paths": ((int,), False, 0),
    },
}


def _check(node: dict, schema: dict, prefix: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{prefix or 'config'}: expected a mapping")
    unknown = sorted(set(node) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key {prefix + unknown[0]!r}")
    out = {}
    for key, spec in schema.items():
        path = prefix + key
        if isinstance(spec, dict):
            out[key] = _check(node.get(key, {}), spec, path + ".")
            continue
        types, required, default = spec
        if key not in node or (node[key] is None and not required):
            if required:
                raise ConfigError(f"missing required key {path!r}")
            out[key] = copy.deepcopy(default)
            continue
        val = node[key]
        if isinstance(val, bool) or not isinstance(val, types):
            if not (float in types and isinstance(val, int) and not isinstance(val, bool)):
                raise ConfigError(f"key {path!r} has type {type(val).__name__}, expected {types[0].__name__}")
        out[key] = float(val) if types is _NUM and isinstance(val, float) else val
    return out


def validate_config(raw: dict) -> dict:
    """Validated config with defaults filled in."""
    cfg = _check(raw, SCHEMA, "")
    if cfg["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"key 'schema': unsupported version {cfg['schema']} (expected {SCHEMA_VERSION})")
    if cfg["target"] not in TARGETS:
        raise ConfigError(f"key 'target': {cfg['target']!r} not in {list(TARGETS)}")
    n = cfg["ensemble"]["length"]
    if n < 16 or n & (n - 1):
        raise ConfigError("key 'ensemble.length': must be a power of two >= 16")
    if cfg["ensemble"]["paths"] < 1:
        raise ConfigError("key 'ensemble.paths': must be positive")
    if cfg["ensemble"]["seed"] < 0:
        raise ConfigError("key 'ensemble.seed': must be non-negative")
    return cfg


def load_config(path) -> dict:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {str(path)!r} not found") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {str(path)!r} is not valid YAML: {exc}") from None
    return validate_config(raw if raw is not None else {})


def config_hash(cfg: dict) -> str:
    """SHA-256 prefix of the canonical JSON form (key order does not matter)."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
