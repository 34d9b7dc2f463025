"""
Punctured-torus lab - vanishing-obstacle limits on a periodic box.

Pseudo-spectral Poisson, Stokes and Navier-Stokes solvers on (-L, L)^2 minus a
disc, with radius sweeps and closed-form reference solutions.
"""

__version__ = "0.1.0"

from ptlab.core.grid import GridSpec, ObstacleMask, build_grid, build_obstacle_mask
from ptlab.errors import PtlabError

__all__ = [
    "GridSpec",
    "ObstacleMask",
    "PtlabError",
    "build_grid",
    "build_obstacle_mask",
    "__version__",
]
