"""
Periodic differential calculus on a GridSpec.

Fields are sampled on the nodes of one fundamental cell and transformed with
real 2D FFTs (``scipy.fft.rfft2``). Conventions:

- wavevectors are (pi / L) * (m1, m2) with m_i in {-N/2, ..., N/2 - 1};
- first-derivative multipliers treat the Nyquist index as zero, so gradient,
  divergence and the Leray projector are exact on real data;
- the Laplacian and its inverse use the exact |k|^2, Nyquist included;
- reported norms near obstacles use centred differences, not spectral ones.
"""

import logging
import numbers
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple, Union

import numpy as np
import scipy.fft as sfft

from ptlab.core.grid import GridSpec, ObstacleMask
from ptlab.errors import InvalidGrid, NonFiniteField, NonZeroMean

logger = logging.getLogger(__name__)

DEFAULT_MEAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real samples of a periodic scalar on the grid nodes."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise InvalidGrid(
                f"scalar samples have shape {self.values.shape}, grid needs {self.grid.shape}"
            )
        if not np.isfinite(self.values).all():
            raise NonFiniteField("scalar field holds NaN or Inf samples")

    @classmethod
    def from_function(
        cls, grid: GridSpec, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    ) -> "ScalarField":
        X, Y = grid.mesh
        return cls(grid, np.asarray(fn(X, Y), dtype=np.float64) + np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, value: float = 0.0) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def _wrap(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return self._wrap(self.values + other.values)
        return self._wrap(self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            return self._wrap(self.values - other.values)
        return self._wrap(self.values - other)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            return self._wrap(self.values * other.values)
        return self._wrap(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Two-component periodic field; ``values[0]`` is u1, ``values[1]`` is u2."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (2,) + self.grid.shape:
            raise InvalidGrid(
                f"vector samples have shape {self.values.shape}, "
                f"grid needs {(2,) + self.grid.shape}"
            )
        if not np.isfinite(self.values).all():
            raise NonFiniteField("vector field holds NaN or Inf samples")

    @classmethod
    def from_components(cls, u1: ScalarField, u2: ScalarField) -> "VectorField":
        if u1.grid != u2.grid:
            raise InvalidGrid("vector components live on different grids")
        return cls(u1.grid, np.stack([u1.values, u2.values]))

    @classmethod
    def from_functions(cls, grid: GridSpec, fn1, fn2) -> "VectorField":
        return cls.from_components(
            ScalarField.from_function(grid, fn1), ScalarField.from_function(grid, fn2)
        )

    @classmethod
    def constant(cls, grid: GridSpec, value: Tuple[float, float] = (0.0, 0.0)) -> "VectorField":
        values = np.empty((2,) + grid.shape)
        values[0] = value[0]
        values[1] = value[1]
        return cls(grid, values)

    @property
    def u1(self) -> ScalarField:
        return ScalarField(self.grid, self.values[0])

    @property
    def u2(self) -> ScalarField:
        return ScalarField(self.grid, self.values[1])

    def _wrap(self, values: np.ndarray) -> "VectorField":
        return VectorField(self.grid, values)

    def __add__(self, other):
        if isinstance(other, VectorField):
            return self._wrap(self.values + other.values)
        return self._wrap(self.values + np.reshape(other, (-1, 1, 1)))

    def __sub__(self, other):
        if isinstance(other, VectorField):
            return self._wrap(self.values - other.values)
        return self._wrap(self.values - np.reshape(other, (-1, 1, 1)))

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return self._wrap(self.values * other)
        # pointwise weight shared by both components
        return self._wrap(self.values * np.asarray(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.values)


Field = Union[ScalarField, VectorField]


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Half-plane (rfft) coefficients; conjugate symmetry is implied."""

    grid: GridSpec
    coeffs: np.ndarray


@dataclass(frozen=True, eq=False)
class Wavenumbers:
    """Multipliers shared by every operator on one grid (rfft layout)."""

    kx: np.ndarray  # (N, 1), Nyquist zeroed
    ky: np.ndarray  # (1, N/2 + 1), Nyquist zeroed
    ksq: np.ndarray  # exact |k|^2
    ksq_compatible: np.ndarray  # kx^2 + ky^2 from the zeroed multipliers
    keep: np.ndarray  # 2/3-rule mask
    parseval_weight: np.ndarray  # 1 on self-conjugate columns, 2 elsewhere


@lru_cache(maxsize=32)
def wavenumbers(grid: GridSpec) -> Wavenumbers:
    """Build (and cache per grid) the spectral multipliers."""
    n = grid.N
    scale = np.pi / grid.L
    mx = np.fft.fftfreq(n, d=1.0 / n).round().astype(np.int64)
    my = np.fft.rfftfreq(n, d=1.0 / n).round().astype(np.int64)

    kx_exact = scale * mx
    ky_exact = scale * my
    kx = np.where(np.abs(mx) == n // 2, 0.0, kx_exact)[:, None]
    ky = np.where(np.abs(my) == n // 2, 0.0, ky_exact)[None, :]

    ksq = kx_exact[:, None] ** 2 + ky_exact[None, :] ** 2
    ksq_compatible = kx**2 + ky**2
    keep = np.maximum(np.abs(mx)[:, None], np.abs(my)[None, :]) <= n / 3.0

    weight = np.full(my.shape, 2.0)
    weight[0] = 1.0
    weight[-1] = 1.0  # column N/2

    for arr in (kx, ky, ksq, ksq_compatible, keep):
        arr.setflags(write=False)
    logger.debug("Wavenumbers built for L=%g, N=%d", grid.L, n)
    return Wavenumbers(
        kx=kx,
        ky=ky,
        ksq=ksq,
        ksq_compatible=ksq_compatible,
        keep=keep,
        parseval_weight=weight[None, :],
    )


def _rfft(values: np.ndarray) -> np.ndarray:
    return sfft.rfft2(values, axes=(-2, -1))


def _irfft(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    return sfft.irfft2(coeffs, s=grid.shape, axes=(-2, -1))


def forward(s: ScalarField) -> SpectralCoeffs:
    return SpectralCoeffs(s.grid, _rfft(s.values))


def inverse(c: SpectralCoeffs) -> ScalarField:
    return ScalarField(c.grid, _irfft(c.coeffs, c.grid))


def gradient(s: ScalarField) -> VectorField:
    """Spectral gradient; exact for resolved trigonometric polynomials."""
    wn = wavenumbers(s.grid)
    c = _rfft(s.values)
    stacked = np.stack([1j * wn.kx * c, 1j * wn.ky * c])
    return VectorField(s.grid, _irfft(stacked, s.grid))


def divergence(v: VectorField) -> ScalarField:
    wn = wavenumbers(v.grid)
    c = _rfft(v.values)
    return ScalarField(v.grid, _irfft(1j * wn.kx * c[0] + 1j * wn.ky * c[1], v.grid))


def laplacian(s: Field) -> Field:
    """Spectral Laplacian with the exact symbol -|k|^2 (componentwise for vectors)."""
    wn = wavenumbers(s.grid)
    values = _irfft(-wn.ksq * _rfft(s.values), s.grid)
    return type(s)(s.grid, values)


def inv_laplacian_zero_mean(
    f: ScalarField, tol: float = DEFAULT_MEAN_TOL, compatible: bool = False
) -> ScalarField:
    """Zero-mean solution u of -Laplace(u) = f on the torus.

    With ``compatible=True`` the symbol is built from the first-derivative
    multipliers (the Laplacian that equals ``divergence(gradient(.))``);
    modes on which that symbol vanishes are set to zero.

    Raises:
        NonZeroMean: if |mean(f)| > tol * (||f|| + 1); the periodic problem
            then has no solution.
    """
    mean = box_mean(f)
    bound = tol * (masked_l2(f) + 1.0)
    if abs(mean) > bound:
        raise NonZeroMean(
            f"forcing has box mean {mean:.3e}; the periodic problem has no solution",
            mean=mean,
        )
    wn = wavenumbers(f.grid)
    symbol = wn.ksq_compatible if compatible else wn.ksq
    c = _rfft(f.values)
    out = np.zeros_like(c)
    nonzero = symbol > 0
    out[nonzero] = c[nonzero] / symbol[nonzero]
    return ScalarField(f.grid, _irfft(out, f.grid))


def leray_project_coeffs(c: np.ndarray, wn: Wavenumbers) -> np.ndarray:
    k_dot = wn.kx * c[0] + wn.ky * c[1]
    ratio = np.zeros_like(k_dot)
    nonzero = wn.ksq_compatible > 0
    ratio[nonzero] = k_dot[nonzero] / wn.ksq_compatible[nonzero]
    return np.stack([c[0] - wn.kx * ratio, c[1] - wn.ky * ratio])


def leray_project(v: VectorField) -> VectorField:
    """Orthogonal projection onto discretely divergence-free fields.

    P v = v - grad(Laplace^-1 div v) modewise; the zero mode (mean velocity)
    passes through unchanged.
    """
    wn = wavenumbers(v.grid)
    return VectorField(v.grid, _irfft(leray_project_coeffs(_rfft(v.values), wn), v.grid))


def leray_project_array(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``leray_project`` on a raw (2, N, N) array, for Krylov matvecs."""
    return _irfft(leray_project_coeffs(_rfft(values), wavenumbers(grid)), grid)


def dealias(s: Field) -> Field:
    """2/3 rule: zero every mode with max(|m1|, |m2|) > N/3."""
    wn = wavenumbers(s.grid)
    return type(s)(s.grid, _irfft(wn.keep * _rfft(s.values), s.grid))


def advection(u: VectorField) -> VectorField:
    """(u . grad) u with spectral derivatives, products formed on the nodes."""
    wn = wavenumbers(u.grid)
    c = _rfft(u.values)
    dx = _irfft(1j * wn.kx * c, u.grid)
    dy = _irfft(1j * wn.ky * c, u.grid)
    return VectorField(u.grid, u.values[0] * dx + u.values[1] * dy)


def _outside_weight(s: Field, mask: Optional[ObstacleMask]) -> Optional[np.ndarray]:
    if mask is None:
        return None
    if mask.grid != s.grid:
        raise InvalidGrid("field and mask live on different grids")
    if mask.is_empty:
        return None
    return mask.outside


def masked_l2(s: Field, mask: Optional[ObstacleMask] = None) -> float:
    """sqrt(h^2 * sum over nodes outside the disc of |s|^2)."""
    weight = _outside_weight(s, mask)
    sq = s.values**2
    if isinstance(s, VectorField):
        sq = sq.sum(axis=0)
    if weight is not None:
        sq = sq * weight
    return float(np.sqrt(s.grid.cell_area * sq.sum()))


def masked_h1_seminorm(s: Field, mask: Optional[ObstacleMask] = None) -> float:
    """Discrete ||grad s|| from periodic centred differences, summed outside the disc."""
    weight = _outside_weight(s, mask)
    two_h = 2.0 * s.grid.h
    dx = (np.roll(s.values, -1, axis=-2) - np.roll(s.values, 1, axis=-2)) / two_h
    dy = (np.roll(s.values, -1, axis=-1) - np.roll(s.values, 1, axis=-1)) / two_h
    sq = dx**2 + dy**2
    if isinstance(s, VectorField):
        sq = sq.sum(axis=0)
    if weight is not None:
        sq = sq * weight
    return float(np.sqrt(s.grid.cell_area * sq.sum()))


def box_mean(s: Field, mask: Optional[ObstacleMask] = None):
    """Average over the whole box with s extended by zero into the disc.

    Returns a float for scalars and a (mean_1, mean_2) tuple for vectors.
    """
    weight = _outside_weight(s, mask)
    values = s.values if weight is None else s.values * weight
    # h^2 / (4 L^2) = 1 / N^2
    means = values.mean(axis=(-2, -1))
    if isinstance(s, VectorField):
        return float(means[0]), float(means[1])
    return float(means)


def spectral_l2(s: Field) -> float:
    """Full-box L2 norm evaluated in coefficient space (Parseval)."""
    wn = wavenumbers(s.grid)
    c = _rfft(s.values)
    total = (wn.parseval_weight * np.abs(c) ** 2).sum()
    n2 = s.grid.N**2
    return float(np.sqrt(s.grid.cell_area * total / n2))


def spectral_h1_seminorm(s: Field) -> float:
    """Full-box Dirichlet energy sqrt(sum |k|^2 |c_k|^2), exact symbol."""
    wn = wavenumbers(s.grid)
    c = _rfft(s.values)
    total = (wn.parseval_weight * wn.ksq * np.abs(c) ** 2).sum()
    n2 = s.grid.N**2
    return float(np.sqrt(s.grid.cell_area * total / n2))
