"""
Punctured Poisson problem by volume penalization.

The Dirichlet condition on the disc is replaced by the Brinkman term
eta^-1 chi u, giving the SPD system (-Laplace + eta^-1 chi) u = f on the
whole periodic box. The empty mask is the limit problem and takes the
zero-mean spectral path instead.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.fft as sfft

from ptlab.core.grid import GridSpec, ObstacleMask
from ptlab.core.spectral import (
    ScalarField,
    box_mean,
    inv_laplacian_zero_mean,
    laplacian,
    masked_h1_seminorm,
    masked_l2,
    wavenumbers,
)
from ptlab.errors import InvalidGrid, NonCoerciveDomain
from ptlab.solvers.krylov import SolverSettings, inverse_power_iteration, pcg

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PoissonSolution:
    u: ScalarField
    mean: float
    grad_norm: float
    residual: float
    iterations: int


class PenalizedLaplacian:
    """Matrix-free (-Laplace + eta^-1 chi) and its spectral preconditioner.

    Both act on flat node vectors of length N^2 (C order), so they can be
    handed to ``pcg`` directly.
    """

    def __init__(self, grid: GridSpec, mask: ObstacleMask, settings: SolverSettings):
        if mask.grid != grid:
            raise InvalidGrid("mask was built on a different grid")
        self.grid = grid
        self.mask = mask
        self.settings = settings
        wn = wavenumbers(grid)
        self._ksq = wn.ksq
        self._precond_symbol = 1.0 / (wn.ksq + settings.precond_shift)
        self._penalty = mask.chi / settings.eta

    @property
    def size(self) -> int:
        return self.grid.N * self.grid.N

    def _grid_values(self, x: np.ndarray) -> np.ndarray:
        return np.reshape(x, self.grid.shape)

    def apply(self, x: np.ndarray) -> np.ndarray:
        v = self._grid_values(x)
        lap = sfft.irfft2(self._ksq * sfft.rfft2(v), s=self.grid.shape)
        return (lap + self._penalty * v).ravel()

    def precondition(self, x: np.ndarray) -> np.ndarray:
        v = self._grid_values(x)
        out = sfft.irfft2(self._precond_symbol * sfft.rfft2(v), s=self.grid.shape)
        return out.ravel()

    def solve(self, rhs: np.ndarray, x0: Optional[np.ndarray] = None):
        return pcg(
            self.apply,
            rhs,
            precond=self.precondition,
            tol=self.settings.cg_tol,
            max_iter=self.settings.cg_max_iter,
            x0=x0,
        )


def solve_poisson_obstacle(
    f: ScalarField,
    grid: GridSpec,
    mask: ObstacleMask,
    settings: Optional[SolverSettings] = None,
) -> PoissonSolution:
    """Solve -Laplace u + eta^-1 chi u = f with PCG.

    With the empty mask this is the periodic limit problem; its zero-mean
    solution is returned and a forcing with nonzero mean raises NonZeroMean.

    Raises:
        KrylovStall: CG spent ``cg_max_iter`` iterations above ``cg_tol``.
        NonZeroMean: empty mask and box_mean(f) != 0.
    """
    settings = settings or SolverSettings()
    if f.grid != grid:
        raise InvalidGrid("forcing was sampled on a different grid")

    if mask.is_empty:
        u = inv_laplacian_zero_mean(f)
        res_field = -laplacian(u) - f
        residual = masked_l2(res_field) / max(masked_l2(f), np.finfo(float).tiny)
        logger.info("Poisson limit solve (r=0): spectral gauge path, residual %.2e", residual)
        return PoissonSolution(
            u=u,
            mean=box_mean(u),
            grad_norm=masked_h1_seminorm(u),
            residual=residual,
            iterations=0,
        )

    op = PenalizedLaplacian(grid, mask, settings)
    result = op.solve(f.values.ravel())
    u = ScalarField(grid, np.reshape(result.x, grid.shape))
    solution = PoissonSolution(
        u=u,
        mean=box_mean(u, mask),
        grad_norm=masked_h1_seminorm(u, mask),
        residual=result.residual,
        iterations=result.iterations,
    )
    logger.info(
        "Poisson solve r=%g: %d CG iterations, residual %.2e, grad_norm %.6g",
        mask.r,
        result.iterations,
        result.residual,
        solution.grad_norm,
    )
    return solution


def poincare_start_vector(mask: ObstacleMask) -> np.ndarray:
    """Mean-removed indicator of the complement of the disc, flattened."""
    start = mask.outside - mask.outside.mean()
    return start.ravel()


def poincare_constant(
    grid: GridSpec,
    mask: ObstacleMask,
    settings: Optional[SolverSettings] = None,
) -> Tuple[float, float]:
    """Smallest eigenvalue of -Laplace + eta^-1 chi and C_P = lambda_min^-1/2.

    Raises:
        NonCoerciveDomain: the mask is empty (constants span the kernel).
        KrylovStall: an inner solve stalled.
    """
    settings = settings or SolverSettings()
    if mask.is_empty:
        raise NonCoerciveDomain(
            "the periodic Laplacian has constants in its kernel; "
            "no Poincare constant without an obstacle"
        )

    op = PenalizedLaplacian(grid, mask, settings)
    lam, _, sweeps = inverse_power_iteration(
        lambda x: op.solve(x).x,
        op.apply,
        poincare_start_vector(mask),
        tol=settings.eig_tol,
        max_iter=settings.eig_max_iter,
    )
    c_p = 1.0 / math.sqrt(lam)
    logger.info(
        "Poincare estimate r=%g: lambda_min=%.10g, C_P=%.6g after %d sweeps",
        mask.r,
        lam,
        c_p,
        sweeps,
    )
    return lam, c_p
