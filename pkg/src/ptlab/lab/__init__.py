"""Experiment harness: configuration, radius sweeps and report files."""

from ptlab.lab.config import ExperimentConfig
from ptlab.lab.report import write_report
from ptlab.lab.sweeps import run_nse_convergence, run_poisson_sweep, run_stokes_sweep

__all__ = [
    "ExperimentConfig",
    "run_nse_convergence",
    "run_poisson_sweep",
    "run_stokes_sweep",
    "write_report",
]
