"""Configuration, presets, metrics, export and the command line."""

from .config import ConfigError, ExperimentConfig, load_config, preset, resolve
from .export import export
from .metrics import MetricsRow, compute_metrics
from .runner import RunResult, run_experiment

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "MetricsRow",
    "RunResult",
    "compute_metrics",
    "export",
    "load_config",
    "preset",
    "resolve",
    "run_experiment",
]
