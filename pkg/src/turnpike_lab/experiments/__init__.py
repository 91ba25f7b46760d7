"""Experiment harness: configs, rate fitting, runs, and manifests."""

from .config import EscapeConfig, ExperimentConfig, LossConfig, ModelConfig, TrainingConfig, load_config
from .fitting import FitResult, NoDetectableLiftError, fit_terminal_rate, rank_correlation
from .runs import (
    CheckFailure,
    RunManifest,
    check_experiment,
    emit_svg_plots,
    grid_escape_profile,
    profile_run,
    run_escape,
    run_exp0,
    run_experiment,
    run_landscape,
    run_rate,
    run_stationary,
    run_sweep_kappa,
    run_sweep_lambda2,
)

__all__ = [
    "CheckFailure",
    "EscapeConfig",
    "ExperimentConfig",
    "FitResult",
    "LossConfig",
    "ModelConfig",
    "NoDetectableLiftError",
    "RunManifest",
    "TrainingConfig",
    "check_experiment",
    "emit_svg_plots",
    "fit_terminal_rate",
    "grid_escape_profile",
    "load_config",
    "profile_run",
    "rank_correlation",
    "run_escape",
    "run_exp0",
    "run_experiment",
    "run_landscape",
    "run_rate",
    "run_stationary",
    "run_sweep_kappa",
    "run_sweep_lambda2",
]
