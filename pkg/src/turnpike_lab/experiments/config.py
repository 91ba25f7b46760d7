"""Experiment configuration: TOML file, dotted CLI overrides, stable hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

EXPERIMENTS = ("exp0", "sweep_lambda2", "sweep_kappa", "stationary", "rate", "escape", "landscape")


@dataclass
class ModelConfig:
    d: int = 2
    a_diag: list = field(default_factory=lambda: [1.0, 0.65])
    eps_sim: float = 1e-4
    eps_rate: float = 0.1
    T: float = 80.0
    dt: float = 0.05
    N: int = 64
    M: int = 512
    init_cap_s: float = 0.3


@dataclass
class LossConfig:
    kind: str = "align"              # align | bow
    u_tar: list = field(default_factory=lambda: [0.0, 1.0])
    kappa_cand: float = 2.0
    vocab: int = 16
    cand_mean: list = field(default_factory=lambda: [0.0, 1.0])


@dataclass
class TrainingConfig:
    steps: int = 600
    learning_rate: float = 0.01
    lambda_reg: float = 0.0
    resample_noise: bool = True
    grad_clip: float = 0.0           # 0 disables clipping
    bin_width: float = 0.25


@dataclass
class EscapeConfig:
    T: float = 8.0
    alpha: float = 1e-3
    bin_width: float = 0.02
    costate_step: float = 0.01
    fp_dt: float = 1e-4
    n_records: int = 200


@dataclass
class ExperimentConfig:
    experiment: str = "landscape"
    seed: int = 0
    output_dir: str = "runs"
    record_stride: int = 5
    sweep_values: list = field(default_factory=list)
    include_particle_runs: bool = True
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    escape: EscapeConfig = field(default_factory=EscapeConfig)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose one of {EXPERIMENTS}")

    def config_hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def default_sweep(self) -> list:
        if self.sweep_values:
            return list(self.sweep_values)
        if self.experiment == "sweep_lambda2":
            return [0.3, 0.45, 0.65, 0.8]
        if self.experiment == "sweep_kappa":
            return [0.5, 2.0, 8.0]
        return []


_SECTIONS = {
    "model": ModelConfig,
    "loss": LossConfig,
    "training": TrainingConfig,
    "escape": EscapeConfig,
}


def _build(data: dict) -> ExperimentConfig:
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ValueError(f"section [{key}] must be a table")
            kwargs[key] = _SECTIONS[key](**value)
        else:
            kwargs[key] = value
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path | None = None, overrides: list[str] | None = None,
                experiment: str | None = None, output_dir: str | None = None) -> ExperimentConfig:
    """Read a TOML config; apply ``key.path=value`` overrides in order."""
    data: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    for item in overrides or []:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw  # bare strings are allowed without quotes
        node = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValueError(f"override path {key!r} crosses a non-table value")
        node[parts[-1]] = value
    if experiment is not None:
        data["experiment"] = experiment
    if output_dir is not None:
        data["output_dir"] = output_dir
    try:
        return _build(data)
    except TypeError as exc:
        raise ValueError(f"bad configuration: {exc}") from exc
