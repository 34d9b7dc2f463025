"""
Punctured stationary Stokes problem in the discretely divergence-free subspace.

The velocity solves B u = P f with B = P (-Laplace + eta^-1 chi) P, every
Krylov vector Leray-projected. Pressure is recovered afterwards as a
diagnostic.
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
    VectorField,
    box_mean,
    divergence,
    gradient,
    inv_laplacian_zero_mean,
    laplacian,
    leray_project,
    leray_project_array,
    masked_h1_seminorm,
    masked_l2,
    wavenumbers,
)
from ptlab.errors import InvalidGrid, NonCoerciveDomain, NonZeroMean
from ptlab.solvers.krylov import SolverSettings, inverse_power_iteration, pcg

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StokesSolution:
    u: VectorField
    p: ScalarField
    mean: Tuple[float, float]
    grad_norm: float
    residual: float
    iterations: int
    divergence_residual: float


class ProjectedPenalizedOperator:
    """B = P A P and the preconditioner P (-Laplace + kappa)^-1 P on (2 N^2,) vectors."""

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
        self._shape = (2,) + grid.shape

    @property
    def size(self) -> int:
        return 2 * self.grid.N * self.grid.N

    def project(self, x: np.ndarray) -> np.ndarray:
        return leray_project_array(np.reshape(x, self._shape), self.grid).ravel()

    def apply_unprojected(self, x: np.ndarray) -> np.ndarray:
        """A x = (-Laplace + eta^-1 chi) x componentwise."""
        v = np.reshape(x, self._shape)
        lap = sfft.irfft2(self._ksq * sfft.rfft2(v, axes=(-2, -1)), s=self.grid.shape)
        return (lap + self._penalty * v).ravel()

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.project(self.apply_unprojected(self.project(x)))

    def precondition(self, x: np.ndarray) -> np.ndarray:
        v = np.reshape(self.project(x), self._shape)
        out = sfft.irfft2(self._precond_symbol * sfft.rfft2(v, axes=(-2, -1)), s=self.grid.shape)
        return self.project(out.ravel())

    def solve(self, rhs: np.ndarray, x0: Optional[np.ndarray] = None):
        return pcg(
            self.apply,
            self.project(rhs),
            precond=self.precondition,
            tol=self.settings.cg_tol,
            max_iter=self.settings.cg_max_iter,
            x0=x0,
        )


def _divergence_ratio(u: VectorField) -> float:
    return masked_l2(divergence(u)) / (masked_l2(u) + 1e-300)


def solve_stokes_obstacle(
    f: VectorField,
    grid: GridSpec,
    mask: ObstacleMask,
    settings: Optional[SolverSettings] = None,
) -> StokesSolution:
    """Velocity and pressure of the penalized Stokes problem.

    Raises:
        KrylovStall: CG stalled on the projected system.
        NonZeroMean: empty mask and a forcing with nonzero box mean.
    """
    settings = settings or SolverSettings()
    if f.grid != grid:
        raise InvalidGrid("forcing was sampled on a different grid")

    pf = leray_project(f)
    if mask.is_empty:
        mean = box_mean(pf)
        bound = 1e-10 * (masked_l2(pf) + 1.0)
        if max(abs(mean[0]), abs(mean[1])) > bound:
            raise NonZeroMean(
                f"forcing has box mean ({mean[0]:.3e}, {mean[1]:.3e}); "
                "the periodic Stokes problem has no solution",
                mean=max(abs(mean[0]), abs(mean[1])),
            )
        u = VectorField.from_components(
            inv_laplacian_zero_mean(pf.u1), inv_laplacian_zero_mean(pf.u2)
        )
        iterations = 0
        op = ProjectedPenalizedOperator(grid, mask, settings)
        rhs = pf.values.ravel()
        rhs_norm = float(np.linalg.norm(rhs))
        residual = (
            float(np.linalg.norm(rhs - op.apply(u.values.ravel()))) / rhs_norm
            if rhs_norm > 0
            else 0.0
        )
    else:
        op = ProjectedPenalizedOperator(grid, mask, settings)
        result = op.solve(f.values.ravel())
        # one more projection removes the round-off left by the Krylov updates
        u = VectorField(grid, np.reshape(op.project(result.x), (2,) + grid.shape))
        iterations = result.iterations
        residual = result.residual

    p = recover_pressure(u, f, mask, settings)
    solution = StokesSolution(
        u=u,
        p=p,
        mean=box_mean(u, mask),
        grad_norm=masked_h1_seminorm(u, mask),
        residual=residual,
        iterations=iterations,
        divergence_residual=_divergence_ratio(u),
    )
    logger.info(
        "Stokes solve r=%g: %d CG iterations, residual %.2e, grad_norm %.6g, div %.1e",
        mask.r,
        iterations,
        residual,
        solution.grad_norm,
        solution.divergence_residual,
    )
    return solution


def recover_pressure(
    u: VectorField,
    f: VectorField,
    mask: ObstacleMask,
    settings: Optional[SolverSettings] = None,
) -> ScalarField:
    """Zero-mean pressure closing -Laplace u + grad p + eta^-1 chi u = f.

    Taking the divergence of the momentum balance gives
    -Laplace p = -div(f - eta^-1 chi u); the inverse Laplacian uses the
    same derivative multipliers as the Leray projector so that grad p is
    exactly the gradient part of f - eta^-1 chi u.
    """
    settings = settings or SolverSettings()
    g = f - u * (mask.chi / settings.eta)
    return inv_laplacian_zero_mean(-divergence(g), compatible=True)


def momentum_residual(
    u: VectorField,
    p: ScalarField,
    f: VectorField,
    mask: ObstacleMask,
    settings: Optional[SolverSettings] = None,
) -> VectorField:
    """-Laplace u + grad p + eta^-1 chi u - f on the nodes."""
    settings = settings or SolverSettings()
    return -laplacian(u) + gradient(p) + u * (mask.chi / settings.eta) - f


def stokes_poincare_constant(
    grid: GridSpec,
    mask: ObstacleMask,
    settings: Optional[SolverSettings] = None,
) -> Tuple[float, float]:
    """Smallest eigenvalue of B on the divergence-free subspace, and lambda^-1/2.

    Raises:
        NonCoerciveDomain: the mask is empty (constant fields span the kernel).
    """
    settings = settings or SolverSettings()
    if mask.is_empty:
        raise NonCoerciveDomain(
            "constant velocity fields lie in the kernel of the periodic Stokes operator"
        )

    op = ProjectedPenalizedOperator(grid, mask, settings)
    # constant flow past the disc is the slowest mode
    start = op.project(np.stack([mask.outside, np.zeros(grid.shape)]).ravel())
    lam, _, sweeps = inverse_power_iteration(
        lambda x: op.solve(x).x,
        op.apply,
        start,
        tol=settings.eig_tol,
        max_iter=settings.eig_max_iter,
    )
    c_p = 1.0 / math.sqrt(lam)
    logger.info(
        "Stokes Poincare estimate r=%g: lambda_min=%.10g, C_P=%.6g after %d sweeps",
        mask.r,
        lam,
        c_p,
        sweeps,
    )
    return lam, c_p
