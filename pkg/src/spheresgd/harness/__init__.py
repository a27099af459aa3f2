"""Experiment orchestration: configuration, sweeps, verification, CLI."""

from .config import ExperimentConfig, kernel_from_dict, kernel_to_dict
from .runner import run_sweep
from .verify import run_verify

__all__ = [
    "ExperimentConfig",
    "kernel_from_dict",
    "kernel_to_dict",
    "run_sweep",
    "run_verify",
]
