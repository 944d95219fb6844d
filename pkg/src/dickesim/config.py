"""Run configuration: flat-key config files, CLI overrides, validation.

Config files are flat JSON objects; every key maps one-to-one to a CLI
flag.  Unknown keys fail closed.  Physical defaults sit at the resonant
point epsilon = omega = 1.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config", "config_hash", "MODES"]

MODES = ("evolve", "lindblad", "sweep", "phase-diagram", "wigner", "ground-state")

ENV_OUTPUT_DIR = "DICKESIM_OUTPUT_DIR"


@dataclass
class RunConfig:
    mode: str = ""
    # system
    n_qubits: int = 0
    epsilon: float = 1.0
    omega: float = 1.0
    n_max: int | None = None  # None: auto-sized from lambda_d and N
    entropy_log_base: str = "natural"
    tail_threshold: float = 1e-8
    tail_frac: float = 0.1
    # ramp
    upsilon: float | None = None
    upsilon_log2: float | None = None
    lambda_start: float = 0.0
    lambda_d: float = 2.0
    checkpoint_dlambda: float = 0.01
    tol: float = 1e-8
    # open system
    kappa: float = 0.0
    nbar: float = 0.0
    # sweep / phase diagram
    upsilon_log2_min: float = -9.0
    upsilon_log2_max: float = 3.0
    upsilon_count: int = 25
    n_list: list = field(default_factory=list)
    quench_lambdas: list = field(default_factory=lambda: [0.8, 1.1, 1.4, 1.7, 2.0])
    quench_n: int | None = None
    threshold: float | None = None  # None: log(2) + 0.05
    smoothing_window: int = 5
    # tomography
    snapshot_in: str | None = None
    xp_half_width: float | None = None
    xp_points: int = 201
    theta_points: int = 181
    phi_points: int = 361
    scaled_2_over_pi: bool = False
    # ground state
    lambda_value: float = 0.0
    sector: str = "even"
    # bookkeeping
    output_dir: str = "dickesim_out"
    workers: int = 1
    seed: int = 0
    snapshot_final: bool = False

    def resolved_upsilon(self) -> float:
        if self.upsilon is not None and self.upsilon_log2 is not None:
            raise ConfigError("give either upsilon or upsilon_log2, not both")
        if self.upsilon_log2 is not None:
            return float(2.0**self.upsilon_log2)
        if self.upsilon is not None:
            return float(self.upsilon)
        raise ConfigError("mode requires upsilon or upsilon_log2")


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}

_POSITIVE = ("epsilon", "omega", "checkpoint_dlambda", "tol", "lambda_d")
_NON_NEGATIVE = ("kappa", "nbar", "lambda_start", "lambda_value", "tail_threshold")


def _coerce(key: str, value):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    if value is None:
        return None
    if key in ("n_list", "quench_lambdas"):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key} must be a list")
        caster = int if key == "n_list" else float
        return [caster(v) for v in value]
    if key in ("scaled_2_over_pi", "snapshot_final"):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{key} must be a boolean")
    return value


def parse_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build and validate a RunConfig from a flat JSON file plus overrides.

    Precedence: CLI overrides > environment output dir > file > defaults.
    Unknown keys in either source are rejected.
    """
    data: dict = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file {path} does not exist")
        with open(path) as f:
            try:
                raw = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a flat JSON object")
        for k, v in raw.items():
            data[k] = _coerce(k, v)
    env_dir = os.environ.get(ENV_OUTPUT_DIR)
    if env_dir:
        data["output_dir"] = env_dir
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        data[k] = _coerce(k, v)

    cfg = RunConfig()
    for k, v in data.items():
        setattr(cfg, k, v)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.mode not in MODES:
        raise ConfigError(
            f"mode must be one of {', '.join(MODES)}; got {cfg.mode!r}"
        )
    needs_system = cfg.mode in ("evolve", "lindblad", "sweep", "phase-diagram", "ground-state")
    if needs_system and cfg.mode != "phase-diagram":
        if cfg.n_qubits < 1:
            raise ConfigError(f"n_qubits must be >= 1, got {cfg.n_qubits}")
    for key in _POSITIVE:
        if getattr(cfg, key) <= 0:
            raise ConfigError(f"{key} must be > 0, got {getattr(cfg, key)}")
    for key in _NON_NEGATIVE:
        if getattr(cfg, key) < 0:
            raise ConfigError(f"{key} must be >= 0, got {getattr(cfg, key)}")
    if cfg.lambda_d <= cfg.lambda_start:
        raise ConfigError(
            f"lambda_d ({cfg.lambda_d}) must exceed lambda_start ({cfg.lambda_start})"
        )
    if cfg.n_max is not None and cfg.n_max < 1:
        raise ConfigError(f"n_max must be >= 1, got {cfg.n_max}")
    if cfg.entropy_log_base not in ("natural", "base2"):
        raise ConfigError(
            f"entropy_log_base must be 'natural' or 'base2', got {cfg.entropy_log_base!r}"
        )
    if cfg.mode in ("evolve", "lindblad"):
        cfg.resolved_upsilon()  # raises when absent or doubly specified
    if cfg.mode in ("sweep", "phase-diagram"):
        if cfg.upsilon_count < 1:
            raise ConfigError("upsilon_count must be >= 1")
        if cfg.upsilon_log2_max < cfg.upsilon_log2_min:
            raise ConfigError("upsilon_log2_max must be >= upsilon_log2_min")
    if cfg.mode == "phase-diagram":
        if len(cfg.n_list) < 1:
            raise ConfigError("phase-diagram mode requires n_list")
        if any(n < 1 for n in cfg.n_list):
            raise ConfigError("n_list entries must be >= 1")
    if cfg.mode == "wigner" and not cfg.snapshot_in:
        raise ConfigError("wigner mode requires snapshot_in")
    if cfg.mode == "ground-state" and cfg.sector not in ("even", "odd", "full"):
        raise ConfigError(f"sector must be even/odd/full, got {cfg.sector!r}")
    if cfg.threshold is not None and cfg.threshold <= float(np.log(2.0)):
        raise ConfigError("threshold must exceed log 2")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.smoothing_window < 1 or cfg.smoothing_window % 2 == 0:
        raise ConfigError("smoothing_window must be odd and >= 1")


_HASH_EXCLUDE = {"output_dir", "workers"}


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 over the physics-relevant configuration, hex-encoded."""
    payload = {
        f.name: getattr(cfg, f.name)
        for f in fields(RunConfig)
        if f.name not in _HASH_EXCLUDE
    }
    canon = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
