"""
Periodic grid and obstacle mask for the punctured box (-L, L)^2 minus B(0, r).

The grid always contains the origin node (index N/2 on both axes), so any
nonempty mask holds it and the penalized operators built on the mask are
coercive.
"""

import logging
import math
import numbers
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ptlab.errors import InvalidGrid, InvalidRadius, ObstacleTooLarge

logger = logging.getLogger(__name__)

# Admissibility: a disc of this radius (times L) still leaves every
# point with |x| <= sqrt(2) L inside the periodically extended punctured box.
ADMISSIBLE_RADIUS_FACTOR = 2.0 - math.sqrt(2.0)


@dataclass(frozen=True)
class GridSpec:
    """Uniform N x N periodic grid on (-L, L)^2 with nodes x_j = -L + j h."""

    L: float
    N: int

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def box_area(self) -> float:
        return 4.0 * self.L * self.L

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def origin_index(self) -> int:
        return self.N // 2

    @property
    def max_radius(self) -> float:
        """Exclusive upper bound on admissible obstacle radii."""
        return ADMISSIBLE_RADIUS_FACTOR * self.L

    @cached_property
    def coordinates(self) -> np.ndarray:
        # offsets from the origin node keep the +-x samples exactly symmetric
        return self.h * (np.arange(self.N) - self.N // 2)

    @cached_property
    def mesh(self):
        """(X, Y) node coordinates, ``indexing='ij'`` so values[i, j] = f(x_i, y_j)."""
        return np.meshgrid(self.coordinates, self.coordinates, indexing="ij")

    @cached_property
    def radius_map(self) -> np.ndarray:
        """Distance of every node from the origin (not the periodic distance)."""
        X, Y = self.mesh
        return np.hypot(X, Y)

    @property
    def shape(self):
        return (self.N, self.N)


def build_grid(L: float, N: int) -> GridSpec:
    """Validate and build a periodic grid.

    Raises:
        InvalidGrid: if L <= 0, N is odd or N < 8.
    """
    if not (isinstance(L, numbers.Real) and math.isfinite(L) and L > 0):
        raise InvalidGrid(f"box half-width must be positive, got L={L!r}")
    if not isinstance(N, numbers.Integral) or N < 8 or N % 2:
        raise InvalidGrid(f"grid size must be an even integer >= 8, got N={N!r}")
    return GridSpec(L=float(L), N=int(N))


@dataclass(frozen=True, eq=False)
class ObstacleMask:
    """Node-sampled indicator of the disc D_r."""

    grid: GridSpec
    r: float
    chi: np.ndarray = field(repr=False)
    area: float

    @property
    def is_empty(self) -> bool:
        return not self.chi.any()

    @property
    def node_count(self) -> int:
        return int(self.chi.sum())

    @cached_property
    def outside(self) -> np.ndarray:
        """1 - chi as floats: the weight of Omega_r nodes."""
        return 1.0 - self.chi


def build_obstacle_mask(grid: GridSpec, r: float) -> ObstacleMask:
    """Sample the disc of radius r centred at the origin on the grid nodes.

    A node belongs to the disc iff its distance from the origin is strictly
    less than r; r = 0 gives the empty mask (the unpunctured torus).

    Raises:
        InvalidRadius: if r is negative or not finite.
        ObstacleTooLarge: if r >= (2 - sqrt 2) L.
    """
    if not math.isfinite(r) or r < 0:
        raise InvalidRadius(f"obstacle radius must be finite and >= 0, got r={r!r}")
    if r > 0 and r >= grid.max_radius:
        raise ObstacleTooLarge(
            f"obstacle radius r={r:g} must be below (2 - sqrt 2) L = {grid.max_radius:.6g}"
        )

    chi = (grid.radius_map < r).astype(np.float64)
    chi.setflags(write=False)
    area = grid.cell_area * float(chi.sum())
    logger.debug(
        "Obstacle mask r=%g on N=%d: %d nodes, area=%.6g (disc %.6g)",
        r,
        grid.N,
        int(chi.sum()),
        area,
        math.pi * r * r,
    )
    return ObstacleMask(grid=grid, r=float(r), chi=chi, area=area)


def empty_mask(grid: GridSpec) -> ObstacleMask:
    """The r = 0 mask used by every limit-problem solve."""
    return build_obstacle_mask(grid, 0.0)


def obstacle_area(mask: ObstacleMask, grid: GridSpec) -> float:
    """Measured disc area h^2 * sum(chi)."""
    if mask.grid != grid:
        raise InvalidGrid("mask was built on a different grid")
    return grid.cell_area * float(mask.chi.sum())


def rotate_quarter(values: np.ndarray) -> np.ndarray:
    """Rotate node values by +90 degrees about the origin node.

    Works on the trailing two axes, so vector components stacked on axis 0
    are rotated as scalars (the caller permutes components if needed).
    Index i maps to offset i - N/2; the offset -(-N/2) wraps periodically.
    """
    n = values.shape[-1]
    flip = (n - np.arange(n)) % n
    swapped = np.swapaxes(values, -1, -2)
    return swapped[..., flip, :]
