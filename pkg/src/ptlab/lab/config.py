"""
Experiment configuration.

A TOML file with the keys

    problem, L, N, radii, eta, forcing, out_dir, [nse] u0, T, dt

is validated into a frozen ``ExperimentConfig``. Unknown keys are errors.
"""

import json
import logging
import math
import numbers
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from ptlab import __version__
from ptlab.core.grid import ADMISSIBLE_RADIUS_FACTOR, GridSpec, build_grid
from ptlab.core.spectral import ScalarField, VectorField, box_mean, masked_l2
from ptlab.errors import ConfigError, InvalidGrid
from ptlab.solvers.krylov import SolverSettings
from ptlab.solvers.navier_stokes import TimeSettings

logger = logging.getLogger(__name__)

PROBLEMS = ("poisson", "stokes", "nse")
BUILTIN_FORCINGS = ("zero_mean_trig", "constant", "zero")
INITIAL_VELOCITIES = ("taylor_green", "zero")
TOP_LEVEL_KEYS = ("problem", "L", "N", "radii", "eta", "forcing", "nse", "out_dir")
NSE_KEYS = ("u0", "T", "dt")

DEFAULT_RADII = (0.2, 0.1, 0.05, 0.025)
# relative slack on every strict-decrease or monotonicity check
MONOTONE_SLACK = 1e-3

# (component, k1, k2, cos_amp, sin_amp)
ForcingTerm = Tuple[int, int, int, float, float]
ForcingSpec = Union[str, Tuple[ForcingTerm, ...]]


def _parse_forcing_term(raw: Any, index: int) -> ForcingTerm:
    if not isinstance(raw, (list, tuple)) or len(raw) != 5:
        raise ConfigError(
            f"forcing term {index} must be [component, k1, k2, cos_amp, sin_amp]", key="forcing"
        )
    component, k1, k2, cos_amp, sin_amp = raw
    for name, value in (("component", component), ("k1", k1), ("k2", k2)):
        if isinstance(value, bool) or not isinstance(value, numbers.Integral):
            raise ConfigError(f"forcing term {index}: {name} must be an integer", key="forcing")
    if component not in (1, 2):
        raise ConfigError(f"forcing term {index}: component must be 1 or 2", key="forcing")
    for name, value in (("cos_amp", cos_amp), ("sin_amp", sin_amp)):
        if isinstance(value, bool) or not isinstance(value, numbers.Real):
            raise ConfigError(f"forcing term {index}: {name} must be a number", key="forcing")
        if not math.isfinite(value):
            raise ConfigError(f"forcing term {index}: {name} must be finite", key="forcing")
    return (int(component), int(k1), int(k2), float(cos_amp), float(sin_amp))


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated experiment. ``forcing=None`` picks the problem's default."""

    problem: str
    L: float = math.pi
    N: int = 256
    radii: Tuple[float, ...] = DEFAULT_RADII
    eta: float = 1e-6
    forcing: Optional[ForcingSpec] = None
    u0: str = "taylor_green"
    T: float = 0.5
    dt: float = 1e-3
    out_dir: Path = field(default_factory=lambda: Path("ptlab-out"))

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(
                f"problem must be one of {', '.join(PROBLEMS)}, got {self.problem!r}",
                key="problem",
            )
        try:
            build_grid(self.L, self.N)
        except InvalidGrid as exc:
            raise ConfigError(str(exc), key="N" if "N=" in str(exc) else "L") from exc

        if self.forcing is None:
            default = "zero" if self.problem == "nse" else "zero_mean_trig"
            object.__setattr__(self, "forcing", default)
        self._validate_radii()
        self._validate_forcing()
        if not (isinstance(self.eta, numbers.Real) and math.isfinite(self.eta) and self.eta > 0):
            raise ConfigError(f"eta must be positive, got {self.eta!r}", key="eta")
        if self.u0 not in INITIAL_VELOCITIES:
            raise ConfigError(
                f"nse.u0 must be one of {', '.join(INITIAL_VELOCITIES)}, got {self.u0!r}",
                key="nse.u0",
            )
        # raises ConfigError naming nse.T or nse.dt
        TimeSettings(dt=self.dt, T=self.T)
        object.__setattr__(self, "out_dir", Path(self.out_dir))

    def _validate_radii(self):
        radii = tuple(self.radii)
        for r in radii:
            if isinstance(r, bool) or not isinstance(r, numbers.Real) or not math.isfinite(r):
                raise ConfigError(f"radius {r!r} is not a finite number", key="radii")
            if r <= 0:
                raise ConfigError(f"radii must be positive, got {r!r}", key="radii")
            if r >= ADMISSIBLE_RADIUS_FACTOR * self.L:
                raise ConfigError(
                    f"radius {r:g} is not below (2 - sqrt 2) L = "
                    f"{ADMISSIBLE_RADIUS_FACTOR * self.L:.6g}",
                    key="radii",
                )
        if any(b >= a for a, b in zip(radii, radii[1:])):
            raise ConfigError("radii must be strictly descending", key="radii")
        object.__setattr__(self, "radii", tuple(float(r) for r in radii))

    def _validate_forcing(self):
        if isinstance(self.forcing, str):
            if self.forcing not in BUILTIN_FORCINGS:
                raise ConfigError(
                    f"forcing must be one of {', '.join(BUILTIN_FORCINGS)} "
                    f"or a list of terms, got {self.forcing!r}",
                    key="forcing",
                )
            return
        terms = tuple(_parse_forcing_term(t, i) for i, t in enumerate(self.forcing))
        if not terms:
            raise ConfigError("custom forcing needs at least one term", key="forcing")
        if self.problem == "poisson" and any(t[0] != 1 for t in terms):
            raise ConfigError("poisson forcing terms must use component 1", key="forcing")
        object.__setattr__(self, "forcing", terms)

    @property
    def grid(self) -> GridSpec:
        return build_grid(self.L, self.N)

    @property
    def settings(self) -> SolverSettings:
        return SolverSettings(eta=self.eta)

    @property
    def time_settings(self) -> TimeSettings:
        return TimeSettings(dt=self.dt, T=self.T)

    @property
    def is_vector(self) -> bool:
        return self.problem != "poisson"

    @property
    def mode(self) -> str:
        """'convergence' for zero-mean forcing, 'blowup' otherwise."""
        if self.problem == "nse":
            return "convergence"
        f = build_forcing(self, self.grid)
        mean = box_mean(f)
        peak = max(np.abs(np.atleast_1d(mean)))
        return "blowup" if peak > 1e-10 * (masked_l2(f) + 1.0) else "convergence"

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        unknown = sorted(set(data) - set(TOP_LEVEL_KEYS))
        if unknown:
            raise ConfigError(f"unknown config key {unknown[0]!r}", key=unknown[0])
        if "problem" not in data:
            raise ConfigError("missing required key 'problem'", key="problem")

        kwargs: Dict[str, Any] = {"problem": data["problem"]}
        for key in ("L", "N", "eta", "forcing", "out_dir"):
            if key in data:
                kwargs[key] = data[key]
        if "radii" in data:
            if not isinstance(data["radii"], list):
                raise ConfigError("radii must be a list of numbers", key="radii")
            kwargs["radii"] = tuple(data["radii"])
        if "N" in kwargs and (
            isinstance(kwargs["N"], bool) or not isinstance(kwargs["N"], numbers.Integral)
        ):
            raise ConfigError(f"N must be an integer, got {kwargs['N']!r}", key="N")
        if "L" in kwargs and (
            isinstance(kwargs["L"], bool) or not isinstance(kwargs["L"], numbers.Real)
        ):
            raise ConfigError(f"L must be a number, got {kwargs['L']!r}", key="L")
        if "forcing" in kwargs and not isinstance(kwargs["forcing"], (str, list)):
            raise ConfigError("forcing must be a name or a list of terms", key="forcing")
        if "out_dir" in kwargs and not isinstance(kwargs["out_dir"], str):
            raise ConfigError("out_dir must be a string path", key="out_dir")

        nse = data.get("nse", {})
        if not isinstance(nse, dict):
            raise ConfigError("nse must be a table", key="nse")
        unknown = sorted(set(nse) - set(NSE_KEYS))
        if unknown:
            raise ConfigError(f"unknown config key 'nse.{unknown[0]}'", key=f"nse.{unknown[0]}")
        for key in NSE_KEYS:
            if key in nse:
                kwargs[key] = nse[key]
        for key in ("T", "dt", "eta"):
            value = kwargs.get(key)
            if value is not None and (
                isinstance(value, bool) or not isinstance(value, numbers.Real)
            ):
                raise ConfigError(f"{key} must be a number, got {value!r}", key=key)
        return cls(**kwargs)

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """Load a config file. TOML syntax errors surface as ``tomllib.TOMLDecodeError``."""
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        logger.info("Loaded config %s", path)
        return cls.from_dict(data)

    def to_toml(self) -> str:
        """Deterministic TOML echo, readable back by ``from_toml``."""
        lines = [
            f"# ptlab {__version__}",
            f"# monotone_slack = {MONOTONE_SLACK!r}",
            f"problem = {json.dumps(self.problem)}",
            f"L = {self.L!r}",
            f"N = {self.N}",
            "radii = [" + ", ".join(repr(r) for r in self.radii) + "]",
            f"eta = {self.eta!r}",
        ]
        if isinstance(self.forcing, str):
            lines.append(f"forcing = {json.dumps(self.forcing)}")
        else:
            terms = ", ".join(
                f"[{c}, {k1}, {k2}, {a!r}, {b!r}]" for c, k1, k2, a, b in self.forcing
            )
            lines.append(f"forcing = [{terms}]")
        lines.append(f"out_dir = {json.dumps(self.out_dir.as_posix())}")
        lines += [
            "",
            "[nse]",
            f"u0 = {json.dumps(self.u0)}",
            f"T = {float(self.T)!r}",
            f"dt = {float(self.dt)!r}",
        ]
        return "\n".join(lines) + "\n"


def _trig_term(grid: GridSpec, k1: int, k2: int, cos_amp: float, sin_amp: float) -> np.ndarray:
    X, Y = grid.mesh
    phase = math.pi * (k1 * X + k2 * Y) / grid.L
    return cos_amp * np.cos(phase) + sin_amp * np.sin(phase)


def build_forcing(cfg: ExperimentConfig, grid: GridSpec) -> Union[ScalarField, VectorField]:
    """Sample the configured forcing: a scalar for poisson, a vector otherwise."""
    X, Y = grid.mesh
    w = math.pi / grid.L
    if cfg.forcing == "zero":
        if cfg.is_vector:
            return VectorField.constant(grid)
        return ScalarField.constant(grid)
    if cfg.forcing == "constant":
        if cfg.is_vector:
            return VectorField.constant(grid, (1.0, 0.0))
        return ScalarField.constant(grid, 1.0)
    if cfg.forcing == "zero_mean_trig":
        if not cfg.is_vector:
            return ScalarField(grid, np.cos(w * X) * np.cos(w * Y))
        f = VectorField(grid, np.stack([np.cos(w * Y), np.cos(w * X)]))
        return f - box_mean(f)

    values = np.zeros((2,) + grid.shape)
    for component, k1, k2, cos_amp, sin_amp in cfg.forcing:
        values[component - 1] += _trig_term(grid, k1, k2, cos_amp, sin_amp)
    if cfg.is_vector:
        return VectorField(grid, values)
    return ScalarField(grid, values[0])
