"""
Krylov machinery shared by the penalized solvers.

``pcg`` wraps ``scipy.sparse.linalg.cg`` with an iteration counter and a
true-residual check; ``inverse_power_iteration`` estimates the smallest
eigenvalue of an SPD operator from repeated solves.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from ptlab.errors import ConfigError, KrylovStall

logger = logging.getLogger(__name__)

Matvec = Callable[[np.ndarray], np.ndarray]

# restarts from the current iterate when the recursive residual drifted
MAX_RESTARTS = 3


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs of the stationary solves."""

    eta: float = 1e-6
    cg_tol: float = 1e-10
    cg_max_iter: int = 20000
    precond_shift: float = 1.0
    eig_tol: float = 1e-8
    eig_max_iter: int = 200

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ConfigError(f"eta must be positive, got {self.eta!r}", key="eta")
        if not 0 < self.cg_tol < 1:
            raise ConfigError(f"cg_tol must lie in (0, 1), got {self.cg_tol!r}", key="cg_tol")
        if self.cg_max_iter < 1:
            raise ConfigError(
                f"cg_max_iter must be >= 1, got {self.cg_max_iter!r}", key="cg_max_iter"
            )
        if not self.precond_shift > 0:
            raise ConfigError(
                f"precond_shift must be positive, got {self.precond_shift!r}",
                key="precond_shift",
            )
        if not 0 < self.eig_tol < 1 or self.eig_max_iter < 1:
            raise ConfigError("inverse iteration controls out of range", key="eig_tol")


@dataclass(frozen=True, eq=False)
class KrylovResult:
    x: np.ndarray
    iterations: int
    residual: float


def _as_operator(matvec: Matvec, size: int) -> LinearOperator:
    return LinearOperator((size, size), matvec=matvec, dtype=np.float64)


def pcg(
    matvec: Matvec,
    rhs: np.ndarray,
    precond: Optional[Matvec] = None,
    tol: float = 1e-10,
    max_iter: int = 20000,
    x0: Optional[np.ndarray] = None,
) -> KrylovResult:
    """Preconditioned conjugate gradients on flat float64 vectors.

    Convergence is judged on the true relative residual
    ||b - A x|| / ||b||; if the recursively updated residual claims
    convergence while the true one does not, CG restarts from x.

    Raises:
        KrylovStall: if ``max_iter`` iterations are spent above tolerance.
    """
    size = rhs.size
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return KrylovResult(x=np.zeros_like(rhs), iterations=0, residual=0.0)

    A = _as_operator(matvec, size)
    M = _as_operator(precond, size) if precond is not None else None
    x = np.zeros_like(rhs) if x0 is None else x0.copy()

    iterations = 0
    residual = float("inf")
    for attempt in range(MAX_RESTARTS + 1):
        count = [0]

        def _count(_xk):
            count[0] += 1

        remaining = max_iter - iterations
        if remaining <= 0:
            break
        x, info = cg(A, rhs, x0=x, rtol=tol, atol=0.0, maxiter=remaining, M=M, callback=_count)
        iterations += count[0]
        residual = float(np.linalg.norm(rhs - matvec(x))) / rhs_norm
        logger.debug(
            "CG pass %d: %d iterations, info=%d, true residual %.3e",
            attempt,
            count[0],
            info,
            residual,
        )
        if residual <= tol:
            return KrylovResult(x=x, iterations=iterations, residual=residual)
        if info != 0:
            break

    raise KrylovStall(
        f"conjugate gradients stalled after {iterations} iterations "
        f"at relative residual {residual:.3e} (tol {tol:.1e})",
        iterations=iterations,
        residual=residual,
    )


def inverse_power_iteration(
    solve: Callable[[np.ndarray], np.ndarray],
    matvec: Matvec,
    x0: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> Tuple[float, np.ndarray, int]:
    """Smallest eigenvalue of an SPD operator by inverse iteration.

    Each sweep applies ``solve`` (an approximate A^-1), renormalizes and
    takes the Rayleigh quotient. Stops when the eigenvalue estimate changes
    by less than ``tol`` relative, or after ``max_iter`` sweeps.

    Returns:
        (lambda_min, unit eigenvector estimate, sweeps performed)
    """
    x = x0 / np.linalg.norm(x0)
    lam = float(np.dot(x, matvec(x)))
    for sweep in range(1, max_iter + 1):
        y = solve(x)
        x = y / np.linalg.norm(y)
        lam_new = float(np.dot(x, matvec(x)))
        change = abs(lam_new - lam) / abs(lam_new)
        logger.debug("Inverse iteration %d: lambda=%.12g (change %.2e)", sweep, lam_new, change)
        lam = lam_new
        if change < tol:
            return lam, x, sweep
    logger.warning("Inverse iteration hit %d sweeps; lambda=%.12g", max_iter, lam)
    return lam, x, max_iter
