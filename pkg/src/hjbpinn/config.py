"""Flat key=value run configuration (a TOML-compatible subset).

One flat namespace covers every subcommand; a config file supplies
overrides on top of a preset, and CLI --set overrides sit on top of the
file.  Every resolved value is echoed into the run manifest so an artifact
can always be reproduced from its manifest alone.
"""

from __future__ import annotations

import json
from typing import Optional

from .hjb import make_problem
from .loss import LossWeights
from .training import TrainConfig

__all__ = ["ConfigError", "parse_flat_config", "resolve_config", "PRESETS", "DEFAULTS"]


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


DEFAULTS = {
    # problem
    "space_dim": 2,
    "box_lower": 0.0,
    "box_upper": 1.0,
    "horizon": 1.0,
    "init": "quadratic",
    # data
    "noise_var": 0.5,
    "noise_kind": "uniform",
    "n_colloc": 600,
    "n_init": 200,
    "n_sup": 3276,
    "data_seed": 12345,
    "shared_dataset": True,
    # loss
    "lambda_init": 0.3,
    "lambda_sup": 0.5,
    # training
    "width": 32,
    "activation": "tanh",
    "steps": 5000,
    "lr": 1e-3,
    "beta1": 0.9,
    "beta2": 0.999,
    "eps": 1e-8,
    "record_every": 100,
    "project_ball": False,
    "weight_radius": 0.0,  # 0 = default 10*sqrt(d_N)
    "seed": 0,
    # sweep
    "widths": [1, 2, 4, 8, 16, 32, 64, 128, 256],
    "seeds": [0, 1, 2],
    # bound reports
    "eta": 0.1,
    "delta": 0.5,
    "s": 0.0,  # 0 = regime default
    "label_bound": 0.0,  # 0 = derive from a sampled dataset
    "init_bound": 0.0,
    # verification
    "verify_scale": 1.0,
}

PRESETS = {
    "desk": {},
    "paper": {"steps": 20000},
}


def _parse_value(raw: str):
    raw = raw.strip()
    if not raw:
        raise ConfigError("missing value")
    try:
        return json.loads(raw.replace("True", "true").replace("False", "false"))
    except json.JSONDecodeError:
        pass
    if raw.startswith("'") and raw.endswith("'") and len(raw) >= 2:
        return raw[1:-1]
    raise ConfigError(f"cannot parse value {raw!r}")


def parse_flat_config(text: str) -> dict:
    """Parse `key = value` lines; values are TOML scalars or arrays."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if not key or not key.replace("_", "").isalnum():
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        raw = raw.split("#", 1)[0] if not raw.strip().startswith(('"', "'", "[")) else raw
        try:
            out[key] = _parse_value(raw)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return out


def resolve_config(path: Optional[str] = None, preset: str = "desk",
                   overrides: Optional[dict] = None) -> dict:
    """Defaults <- preset <- config file <- CLI overrides, with key checking."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    cfg = dict(DEFAULTS)
    cfg.update(PRESETS[preset])
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        file_cfg = parse_flat_config(text)
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    if overrides:
        unknown = set(overrides) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(overrides)
    _typecheck(cfg)
    return cfg


def _typecheck(cfg: dict):
    for key, default in DEFAULTS.items():
        val = cfg[key]
        if isinstance(default, bool):
            if not isinstance(val, bool):
                raise ConfigError(f"{key} must be a boolean, got {val!r}")
        elif isinstance(default, int):
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{key} must be a number, got {val!r}")
        elif isinstance(default, float):
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ConfigError(f"{key} must be a number, got {val!r}")
        elif isinstance(default, str):
            if not isinstance(val, str):
                raise ConfigError(f"{key} must be a string, got {val!r}")
        elif isinstance(default, list):
            if not isinstance(val, list) or not val:
                raise ConfigError(f"{key} must be a nonempty list, got {val!r}")


def problem_from(cfg: dict):
    try:
        return make_problem(int(cfg["space_dim"]), float(cfg["box_lower"]),
                            float(cfg["box_upper"]), float(cfg["horizon"]),
                            init=cfg["init"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def weights_from(cfg: dict) -> LossWeights:
    try:
        return LossWeights(lambda_init=float(cfg["lambda_init"]),
                           lambda_sup=float(cfg["lambda_sup"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def train_config_from(cfg: dict, seed: Optional[int] = None) -> TrainConfig:
    try:
        return TrainConfig(
            steps=int(cfg["steps"]), lr=float(cfg["lr"]), beta1=float(cfg["beta1"]),
            beta2=float(cfg["beta2"]), eps=float(cfg["eps"]),
            record_every=int(cfg["record_every"]),
            seed=int(cfg["seed"] if seed is None else seed),
            project_ball=bool(cfg["project_ball"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
