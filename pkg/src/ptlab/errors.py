"""
Exception hierarchy for the punctured-torus lab.

Every failure the solvers, oracles and the experiment harness can report is a
``PtlabError``. The CLI maps ``ConfigError`` to exit code 2 and every other
``PtlabError`` to exit code 1.
"""

from pathlib import Path
from typing import Optional


class PtlabError(Exception):
    """Base class for all lab errors."""

    def __init__(self, message: str, radius: Optional[float] = None):
        super().__init__(message)
        self.message = message
        self.radius = radius

    def __str__(self) -> str:
        if self.radius is not None:
            return f"{self.message} (r={self.radius:g})"
        return self.message

    def at_radius(self, radius: float) -> "PtlabError":
        """Annotate the error with the obstacle radius it was raised for."""
        self.radius = radius
        return self


class InvalidGrid(PtlabError, ValueError):
    """Grid parameters violate L > 0, N even, N >= 8."""


class InvalidRadius(PtlabError, ValueError):
    """Negative or non-finite obstacle radius."""


class ObstacleTooLarge(PtlabError, ValueError):
    """Disc radius r >= (2 - sqrt 2) L."""


class NonZeroMean(PtlabError, ValueError):
    """Forcing with nonzero box mean handed to a periodic limit problem."""

    def __init__(self, message: str, mean: float = 0.0, radius: Optional[float] = None):
        super().__init__(message, radius)
        self.mean = mean


class NonCoerciveDomain(PtlabError, ValueError):
    """Eigenvalue estimate requested on the unpunctured torus."""


class NonFiniteField(PtlabError, ValueError):
    """A field holds NaN or Inf samples."""


class KrylovStall(PtlabError):
    """Conjugate gradients hit the iteration cap above tolerance."""

    def __init__(
        self,
        message: str,
        iterations: int = 0,
        residual: float = float("nan"),
        radius: Optional[float] = None,
    ):
        super().__init__(message, radius)
        self.iterations = iterations
        self.residual = residual


class CflViolation(PtlabError):
    """Time step too large for the advective CFL cap."""

    def __init__(
        self,
        message: str,
        cfl: float = float("nan"),
        step: Optional[int] = None,
        radius: Optional[float] = None,
    ):
        super().__init__(message, radius)
        self.cfl = cfl
        self.step = step

    def __str__(self) -> str:
        text = super().__str__()
        if self.step is not None:
            text += f" at step {self.step}"
        return text


class InvalidEpsilon(PtlabError, ValueError):
    """Annulus inner radius outside (0, 2)."""


class QuadratureNotConverged(PtlabError):
    """Adaptive quadrature could not reach the requested accuracy."""


class IncompatibleBox(PtlabError, ValueError):
    """Analytic field requested on a box it is not periodic on."""


class ConfigError(PtlabError, ValueError):
    """Malformed or inconsistent experiment configuration."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class ReportIoError(PtlabError):
    """Report files could not be written."""

    def __init__(self, message: str, path: Optional[Path] = None):
        super().__init__(message)
        self.path = path

    def __str__(self) -> str:
        if self.path is not None:
            return f"{self.message}: {self.path}"
        return self.message
