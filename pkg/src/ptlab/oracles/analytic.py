"""
Closed-form reference objects.

- the logarithmic witness log(1 + log(rho/r)) for the Poincare constant on a
  punctured box, with its exact bounds and quadrature cross-checks;
- the radial annulus solution whose H^2 norm blows up as the hole shrinks;
- the Taylor-Green vortex.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from ptlab.core.grid import ADMISSIBLE_RADIUS_FACTOR, GridSpec
from ptlab.core.spectral import ScalarField, VectorField
from ptlab.errors import (
    IncompatibleBox,
    InvalidEpsilon,
    InvalidRadius,
    ObstacleTooLarge,
    QuadratureNotConverged,
)

logger = logging.getLogger(__name__)

ANNULUS_OUTER_RADIUS = 2.0
# nodes numerically on the circle would hit log(0)
RHO_CLAMP = 1.0 + 1e-12
QUAD_RTOL = 1e-6
# smallest interval of the geometric subdivision, as a fraction of eps
FIRST_PANEL = 1e-3


@dataclass(frozen=True)
class RadialProfile:
    """A radial function on [inner, outer] with its first two derivatives."""

    inner: float
    outer: float
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    second_derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, rho):
        return self.value(rho)


@dataclass(frozen=True)
class AnnulusSolution:
    profile: RadialProfile
    C: float
    eps: float


def _check_admissible(r: float, L: float) -> None:
    if not (math.isfinite(r) and r > 0):
        raise InvalidRadius(f"witness radius must be positive, got r={r!r}")
    if r >= ADMISSIBLE_RADIUS_FACTOR * L:
        raise ObstacleTooLarge(
            f"r={r:g} must be below (2 - sqrt 2) L = {ADMISSIBLE_RADIUS_FACTOR * L:.6g}"
        )


def loglog_profile(r: float, L: float) -> RadialProfile:
    """u_r(rho) = log(1 + log(rho / r)) on [r, sqrt(2) L]."""
    _check_admissible(r, L)
    return RadialProfile(
        inner=r,
        outer=math.sqrt(2.0) * L,
        value=lambda rho: np.log1p(np.log(np.asarray(rho) / r)),
        derivative=lambda rho: 1.0 / (np.asarray(rho) * (1.0 + np.log(np.asarray(rho) / r))),
    )


def loglog_field(
    r: float, L: float, grid: Optional[GridSpec] = None
) -> Tuple[RadialProfile, Optional[ScalarField]]:
    """The log-log witness profile and, if a grid is given, its node sampling.

    Nodes inside the disc are set to 0. The sampling uses the plain distance
    to the origin, so the field is not smooth across the box edges; it is a
    test function, not a solution.
    """
    profile = loglog_profile(r, L)
    if grid is None:
        return profile, None
    if not math.isclose(grid.L, L):
        raise IncompatibleBox(f"grid has L={grid.L:g}, witness was built for L={L:g}")
    rho = grid.radius_map
    inside = rho < r
    clamped = np.maximum(rho, r * RHO_CLAMP)
    values = np.where(inside, 0.0, profile.value(clamped))
    return profile, ScalarField(grid, values)


def loglog_bounds(r: float, L: float) -> Tuple[float, float]:
    """(l2_lower, grad_sq_exact) for the witness on the punctured box.

    l2_lower = (L^2/4) log(1 + log(L / 2r))^2 bounds ||u_r||^2 from below;
    grad_sq_exact = 2 pi (1 - 1/(1 + log(sqrt(2) L / r))) is the polar
    integral of |d u_r / d rho|^2 over r <= rho <= sqrt(2) L.
    """
    _check_admissible(r, L)
    l2_lower = 0.25 * L * L * math.log1p(math.log(L / (2.0 * r))) ** 2
    grad_sq_exact = 2.0 * math.pi * (1.0 - 1.0 / (1.0 + math.log(math.sqrt(2.0) * L / r)))
    return l2_lower, grad_sq_exact


def loglog_grad_sq_quadrature(r: float, L: float) -> float:
    """2 pi int_r^{sqrt2 L} rho |u_r'(rho)|^2 d rho, integrated in t = log(rho / r)."""
    _check_admissible(r, L)
    upper = math.log(math.sqrt(2.0) * L / r)
    value, _ = quad(lambda t: 1.0 / (1.0 + t) ** 2, 0.0, upper, epsabs=0.0, epsrel=1e-12)
    return 2.0 * math.pi * value


def loglog_tail_integral() -> float:
    """int_1^inf ds / (s (1 + log s)^2), via s = e^t; equals 1."""
    value, _ = quad(lambda t: 1.0 / (1.0 + t) ** 2, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12)
    return value


def annulus_coefficient(eps: float) -> float:
    return (-1.0 / 3.0 + eps**2 / 4.0 - eps**3 / 12.0) / math.log(ANNULUS_OUTER_RADIUS / eps)


def annulus_solution(eps: float) -> AnnulusSolution:
    """Radial solution of (rho u')'/rho = 1 - 3 rho / 4 with u(eps) = u(2) = 0.

    Raises:
        InvalidEpsilon: eps outside (0, 2).
    """
    if not (math.isfinite(eps) and 0.0 < eps < ANNULUS_OUTER_RADIUS):
        raise InvalidEpsilon(f"inner radius must lie in (0, 2), got eps={eps!r}")
    C = annulus_coefficient(eps)
    shift = -(eps**2) / 4.0 + eps**3 / 12.0

    def value(rho):
        rho = np.asarray(rho, dtype=np.float64)
        return rho**2 / 4.0 - rho**3 / 12.0 + shift + C * np.log(rho / eps)

    def derivative(rho):
        rho = np.asarray(rho, dtype=np.float64)
        return rho / 2.0 - rho**2 / 4.0 + C / rho

    def second_derivative(rho):
        rho = np.asarray(rho, dtype=np.float64)
        return 0.5 - rho / 2.0 - C / rho**2

    profile = RadialProfile(
        inner=eps,
        outer=ANNULUS_OUTER_RADIUS,
        value=value,
        derivative=derivative,
        second_derivative=second_derivative,
    )
    return AnnulusSolution(profile=profile, C=C, eps=eps)


def _geometric_breakpoints(eps: float) -> list:
    points = []
    width = FIRST_PANEL * eps
    while eps + width < ANNULUS_OUTER_RADIUS:
        points.append(eps + width)
        width *= 2.0
    return points


def annulus_h2_blowup(eps: float, quad_points: int = 1000) -> float:
    """2 pi int_eps^2 rho (u'(rho)/rho)^2 d rho for the annulus solution.

    Adaptive quadrature with breakpoints eps + eps/1000 * 2^k, where the
    integrand peaks like rho^-3.

    Raises:
        InvalidEpsilon: eps outside (0, 2).
        QuadratureNotConverged: quad warns or its error estimate exceeds
            1e-6 relative.
    """
    if quad_points < 1000:
        raise ValueError(f"quad_points must be >= 1000, got {quad_points}")
    solution = annulus_solution(eps)
    du = solution.profile.derivative

    def integrand(rho):
        return 2.0 * math.pi * float(du(rho)) ** 2 / rho

    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, abserr = quad(
                integrand,
                eps,
                ANNULUS_OUTER_RADIUS,
                points=_geometric_breakpoints(eps),
                limit=quad_points,
                epsabs=0.0,
                epsrel=1e-9,
            )
        except IntegrationWarning as exc:
            raise QuadratureNotConverged(f"annulus quadrature at eps={eps:g}: {exc}") from exc

    if abserr > QUAD_RTOL * abs(value):
        raise QuadratureNotConverged(
            f"annulus quadrature at eps={eps:g} reached only {abserr / abs(value):.2e} relative"
        )
    logger.debug("annulus H2 seminorm^2 at eps=%g: %.10g (+- %.1e)", eps, value, abserr)
    return value


def taylor_green(t: float, grid: GridSpec) -> VectorField:
    """(sin x cos y, -cos x sin y) e^{-2t}; needs the 2 pi periodic box.

    Raises:
        IncompatibleBox: grid.L != pi.
    """
    if not math.isclose(grid.L, math.pi, rel_tol=1e-12):
        raise IncompatibleBox(f"the Taylor-Green field needs L=pi, grid has L={grid.L:g}")
    decay = math.exp(-2.0 * t)
    X, Y = grid.mesh
    values = np.stack([np.sin(X) * np.cos(Y), -np.cos(X) * np.sin(Y)]) * decay
    return VectorField(grid, values)
