"""Grid geometry and periodic spectral calculus."""

from ptlab.core.grid import GridSpec, ObstacleMask, build_grid, build_obstacle_mask
from ptlab.core.spectral import ScalarField, SpectralCoeffs, VectorField

__all__ = [
    "GridSpec",
    "ObstacleMask",
    "ScalarField",
    "SpectralCoeffs",
    "VectorField",
    "build_grid",
    "build_obstacle_mask",
]
