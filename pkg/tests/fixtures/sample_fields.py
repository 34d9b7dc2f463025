#!/usr/bin/env python3
"""
Sample grids, fields, configs and dense operator helpers for the test suite
"""

import math
from pathlib import Path

import numpy as np

from ptlab.core.grid import build_grid
from ptlab.core.spectral import ScalarField, VectorField

SMALL_N = 32

POISSON_TOML = """\
problem = "poisson"
L = 3.141592653589793
N = 32
radii = [0.8, 0.4]
eta = 1e-6
forcing = "zero_mean_trig"
out_dir = "out"
"""

STOKES_TOML = """\
problem = "stokes"
N = 32
radii = [0.8, 0.4]
"""

NSE_TOML = """\
problem = "nse"
N = 32
radii = [0.8]
eta = 1e-4

[nse]
u0 = "taylor_green"
T = 0.02
dt = 0.005
"""


def small_grid(L: float = math.pi, N: int = SMALL_N):
    return build_grid(L, N)


def trig_scalar(grid, k1: int = 1, k2: int = 1) -> ScalarField:
    """cos(k1 w x) cos(k2 w y) with w = pi / L."""
    w = math.pi / grid.L
    return ScalarField.from_function(grid, lambda X, Y: np.cos(k1 * w * X) * np.cos(k2 * w * Y))


def shear_vector(grid) -> VectorField:
    """(sin y, cos x) on the 2 pi box: zero mean, divergence free."""
    w = math.pi / grid.L
    return VectorField.from_functions(
        grid, lambda X, Y: np.sin(w * Y), lambda X, Y: np.cos(w * X)
    )


def gradient_vector(grid) -> VectorField:
    """grad(sin x sin y): pure gradient, annihilated by the Leray projector."""
    w = math.pi / grid.L
    return VectorField.from_functions(
        grid,
        lambda X, Y: w * np.cos(w * X) * np.sin(w * Y),
        lambda X, Y: w * np.sin(w * X) * np.cos(w * Y),
    )


def dense_matrix(apply, size: int) -> np.ndarray:
    """Assemble a matrix-free operator column by column from unit vectors."""
    A = np.empty((size, size))
    e = np.zeros(size)
    for j in range(size):
        e[j] = 1.0
        A[:, j] = apply(e)
        e[j] = 0.0
    return A


def write_config(directory, text: str, name: str = "config.toml") -> Path:
    path = Path(directory) / name
    path.write_text(text, encoding="utf-8")
    return path
