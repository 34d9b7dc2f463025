"""Penalized obstacle solvers: Poisson, Stokes and time-dependent Navier-Stokes."""

from ptlab.solvers.krylov import SolverSettings
from ptlab.solvers.navier_stokes import TimeSettings, nse_integrate, nse_step
from ptlab.solvers.poisson import poincare_constant, solve_poisson_obstacle
from ptlab.solvers.stokes import recover_pressure, solve_stokes_obstacle

__all__ = [
    "SolverSettings",
    "TimeSettings",
    "nse_integrate",
    "nse_step",
    "poincare_constant",
    "recover_pressure",
    "solve_poisson_obstacle",
    "solve_stokes_obstacle",
]
