"""
Radius sweeps.

Each driver solves the r = 0 limit problem (when it exists) and then every
radius of the config, possibly on a thread pool, and assembles a
``ConvergenceReport`` with rows in descending r and the reference row last.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from ptlab.core.grid import build_obstacle_mask, empty_mask
from ptlab.core.spectral import (
    Field,
    VectorField,
    box_mean,
    masked_h1_seminorm,
    masked_l2,
    spectral_h1_seminorm,
)
from ptlab.errors import ConfigError, PtlabError
from ptlab.lab.config import MONOTONE_SLACK, ExperimentConfig, build_forcing
from ptlab.lab.report import ConvergenceReport, DiagnosticRow, ReportRow
from ptlab.oracles.analytic import taylor_green
from ptlab.solvers.krylov import SolverSettings
from ptlab.solvers.navier_stokes import (
    energy_ledger_check,
    nse_integrate,
    space_time_distance,
)
from ptlab.solvers.poisson import poincare_constant, solve_poisson_obstacle
from ptlab.solvers.stokes import solve_stokes_obstacle, stokes_poincare_constant

logger = logging.getLogger(__name__)

R = TypeVar("R")

# CG residuals leave the energy bound this much room
GRAD_BOUND_SLACK = 1e-6


def fit_rate(radii: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(radii); nan if undetermined."""
    pairs = [(r, v) for r, v in zip(radii, values) if r > 0 and v is not None and v > 0]
    if len(pairs) < 2:
        return float("nan")
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def fit_log_exponent(radii: Sequence[float], values: Sequence[float]) -> float:
    """Slope of log(values) against log(-log r): the power p in values ~ (-log r)^p."""
    pairs = [(r, v) for r, v in zip(radii, values) if 0 < r < 1 and v is not None and v > 0]
    if len(pairs) < 2:
        return float("nan")
    x = np.log([-math.log(p[0]) for p in pairs])
    y = np.log([p[1] for p in pairs])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def poincare_envelope(
    radii: Sequence[float], c_p: Sequence[Optional[float]]
) -> Tuple[float, Optional[bool]]:
    """Fit c in C_P(r) <= c (-log r) on the larger half of the radii, check the rest.

    Only radii in (0, 1) take part. Returns (c, holds); holds is None when
    nothing is left over to check.
    """
    pairs = sorted(
        ((r, v) for r, v in zip(radii, c_p) if 0 < r < 1 and v is not None),
        key=lambda p: -p[0],
    )
    if not pairs:
        return float("nan"), None
    n_fit = (len(pairs) + 1) // 2
    c = max(v / -math.log(r) for r, v in pairs[:n_fit])
    held_out = pairs[n_fit:]
    if not held_out:
        return c, None
    return c, all(v <= c * -math.log(r) * (1.0 + MONOTONE_SLACK) for r, v in held_out)


def perpoinc_ratio(u: Field) -> float:
    """||u - mean(u)|| / ||grad u|| over the full box; at most L/pi for periodic u."""
    grad = spectral_h1_seminorm(u)
    if grad == 0.0:
        return 0.0
    return masked_l2(u - box_mean(u)) / grad


def strictly_decreasing(values: Sequence[float], slack: float = 0.0) -> bool:
    return all(b < a * (1.0 + slack) for a, b in zip(values, values[1:]))


def nondecreasing(values: Sequence[float], slack: float = 0.0) -> bool:
    return all(b >= a * (1.0 - slack) for a, b in zip(values, values[1:]))


def _map_radii(fn: Callable[[float], R], radii: Sequence[float], workers: int) -> List[R]:
    if workers <= 1 or len(radii) <= 1:
        return [fn(r) for r in radii]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map keeps input order whatever the completion order
        return list(pool.map(fn, radii))


def _annotated(fn: Callable[[float], R]) -> Callable[[float], R]:
    def run(r: float) -> R:
        try:
            return fn(r)
        except PtlabError as err:
            raise err.at_radius(r)

    return run


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1e3


def _require(cfg: ExperimentConfig, problem: str) -> None:
    if cfg.problem != problem:
        raise ConfigError(
            f"config describes a {cfg.problem!r} experiment, not {problem!r}", key="problem"
        )


def _finish_stationary(report: ConvergenceReport, with_spectrum: bool) -> ConvergenceReport:
    radii = [row.r for row in report.radius_rows]
    grads = report.column("grad_norm")
    if report.mode == "convergence":
        for name in ("e_l2", "e_h1"):
            report.rates[name] = fit_rate(radii, report.column(name))
            report.checks[f"{name}_decreasing"] = strictly_decreasing(
                report.column(name), MONOTONE_SLACK
            )
        # zero-mean forcing: ||grad u_r||^2 <= (f, u_r - mean) <= (L/pi) ||f|| ||grad u_r||
        ratios = [d.grad_to_forcing for d in report.diagnostics if d.grad_to_forcing is not None]
        report.rates["grad_to_forcing_max"] = max(ratios) if ratios else float("nan")
        report.checks["grad_bounded_by_forcing"] = all(
            q <= report.config.L / math.pi * (1.0 + GRAD_BOUND_SLACK) for q in ratios
        )
    else:
        report.rates["grad_norm"] = fit_rate(radii, grads)
    report.checks["grad_norm_monotone"] = nondecreasing(grads, MONOTONE_SLACK)
    L = report.config.L
    report.checks["perpoinc_bound"] = all(
        d.perpoinc_ratio <= L / math.pi * (1.0 + 1e-12) for d in report.diagnostics
    )
    if with_spectrum and radii:
        c_p = report.column("c_p")
        report.checks["c_p_monotone"] = nondecreasing(c_p)
        report.rates["c_p_log_exponent"] = fit_log_exponent(radii, c_p)
        envelope, holds = poincare_envelope(radii, c_p)
        report.rates["c_p_envelope"] = envelope
        if holds is not None:
            report.checks["c_p_envelope"] = holds
    return report


def run_poisson_sweep(
    cfg: ExperimentConfig,
    settings: Optional[SolverSettings] = None,
    with_spectrum: bool = True,
    workers: int = 1,
) -> ConvergenceReport:
    """Penalized Poisson solves over the configured radii.

    In convergence mode (zero-mean forcing) the limit u_0 is solved first
    and each row carries e_l2 = ||(u_r - mean u_r) - u_0|| and
    e_h1 = ||grad(u_r - u_0)||; in blow-up mode those columns stay empty.
    """
    _require(cfg, "poisson")
    settings = settings or cfg.settings
    grid = cfg.grid
    f = build_forcing(cfg, grid)
    f_norm = masked_l2(f)
    mode = cfg.mode
    logger.info("Poisson sweep (%s) over r=%s at N=%d", mode, list(cfg.radii), grid.N)

    reference = None
    reference_ms = 0.0
    if mode == "convergence":
        start = time.perf_counter()
        reference = solve_poisson_obstacle(f, grid, empty_mask(grid), settings)
        reference_ms = _elapsed_ms(start)
    origin_value = (
        float(reference.u.values[grid.origin_index, grid.origin_index])
        if reference is not None
        else None
    )

    def solve_one(r: float):
        start = time.perf_counter()
        mask = build_obstacle_mask(grid, r)
        sol = solve_poisson_obstacle(f, grid, mask, settings)
        lam, c_p = poincare_constant(grid, mask, settings) if with_spectrum else (None, None)
        row = ReportRow(
            r=r,
            grad_norm=sol.grad_norm,
            mean_1=sol.mean,
            lambda_min=lam,
            c_p=c_p,
            iters=sol.iterations,
        )
        if reference is not None:
            row.e_l2 = masked_l2((sol.u - sol.mean) - reference.u)
            row.e_h1 = masked_h1_seminorm(sol.u - reference.u)
        row.wall_ms = _elapsed_ms(start)
        diag = DiagnosticRow(
            r=r,
            perpoinc_ratio=perpoinc_ratio(sol.u),
            grad_to_forcing=sol.grad_norm / f_norm if f_norm > 0 else None,
            origin_value=origin_value,
        )
        return row, diag

    results = _map_radii(_annotated(solve_one), cfg.radii, workers)
    report = ConvergenceReport(problem="poisson", mode=mode, config=cfg)
    for row, diag in results:
        report.rows.append(row)
        report.diagnostics.append(diag)
    if reference is not None:
        report.rows.append(
            ReportRow(
                r=0.0,
                grad_norm=reference.grad_norm,
                mean_1=reference.mean,
                iters=reference.iterations,
                wall_ms=reference_ms,
            )
        )
        report.diagnostics.append(
            DiagnosticRow(
                r=0.0,
                perpoinc_ratio=perpoinc_ratio(reference.u),
                grad_to_forcing=reference.grad_norm / f_norm if f_norm > 0 else None,
                origin_value=origin_value,
            )
        )
    return _finish_stationary(report, with_spectrum)


def run_stokes_sweep(
    cfg: ExperimentConfig,
    settings: Optional[SolverSettings] = None,
    with_spectrum: bool = True,
    workers: int = 1,
) -> ConvergenceReport:
    """Penalized Stokes solves over the configured radii (vector norms throughout)."""
    _require(cfg, "stokes")
    settings = settings or cfg.settings
    grid = cfg.grid
    f = build_forcing(cfg, grid)
    f_norm = masked_l2(f)
    mode = cfg.mode
    logger.info("Stokes sweep (%s) over r=%s at N=%d", mode, list(cfg.radii), grid.N)

    reference = None
    reference_ms = 0.0
    if mode == "convergence":
        start = time.perf_counter()
        reference = solve_stokes_obstacle(f, grid, empty_mask(grid), settings)
        reference_ms = _elapsed_ms(start)

    def solve_one(r: float):
        start = time.perf_counter()
        mask = build_obstacle_mask(grid, r)
        sol = solve_stokes_obstacle(f, grid, mask, settings)
        if with_spectrum:
            lam, c_p = stokes_poincare_constant(grid, mask, settings)
        else:
            lam, c_p = None, None
        row = ReportRow(
            r=r,
            grad_norm=sol.grad_norm,
            mean_1=sol.mean[0],
            mean_2=sol.mean[1],
            lambda_min=lam,
            c_p=c_p,
            iters=sol.iterations,
        )
        if reference is not None:
            row.e_l2 = masked_l2((sol.u - sol.mean) - reference.u)
            row.e_h1 = masked_h1_seminorm(sol.u - reference.u)
        row.wall_ms = _elapsed_ms(start)
        diag = DiagnosticRow(
            r=r,
            divergence_residual=sol.divergence_residual,
            perpoinc_ratio=perpoinc_ratio(sol.u),
            grad_to_forcing=sol.grad_norm / f_norm if f_norm > 0 else None,
        )
        return row, diag

    results = _map_radii(_annotated(solve_one), cfg.radii, workers)
    report = ConvergenceReport(problem="stokes", mode=mode, config=cfg)
    for row, diag in results:
        report.rows.append(row)
        report.diagnostics.append(diag)
    if reference is not None:
        report.rows.append(
            ReportRow(
                r=0.0,
                grad_norm=reference.grad_norm,
                mean_1=reference.mean[0],
                mean_2=reference.mean[1],
                iters=reference.iterations,
                wall_ms=reference_ms,
            )
        )
        report.diagnostics.append(
            DiagnosticRow(
                r=0.0,
                divergence_residual=reference.divergence_residual,
                perpoinc_ratio=perpoinc_ratio(reference.u),
                grad_to_forcing=reference.grad_norm / f_norm if f_norm > 0 else None,
            )
        )
    report = _finish_stationary(report, with_spectrum)
    report.checks["divergence_free"] = all(
        d.divergence_residual <= 1e-10 for d in report.diagnostics
    )
    return report


def initial_velocity(cfg: ExperimentConfig, grid) -> VectorField:
    if cfg.u0 == "taylor_green":
        return taylor_green(0.0, grid)
    return VectorField.constant(grid)


def run_nse_convergence(
    cfg: ExperimentConfig,
    settings: Optional[SolverSettings] = None,
    workers: int = 1,
) -> ConvergenceReport:
    """Integrate the r = 0 reference and every radius with identical u0, f and dt.

    Each row's e_l2 holds the space-time distance D(r) to the reference run;
    the report fails if any run's energy ledger fails.
    """
    _require(cfg, "nse")
    settings = settings or cfg.settings
    grid = cfg.grid
    ts = cfg.time_settings
    u0 = initial_velocity(cfg, grid)
    forcing = None if cfg.forcing == "zero" else build_forcing(cfg, grid)
    logger.info(
        "NSE convergence over r=%s at N=%d, dt=%g, T=%g", list(cfg.radii), grid.N, ts.dt, ts.T
    )

    def integrate_one(r: float):
        start = time.perf_counter()
        mask = build_obstacle_mask(grid, r)
        traj = nse_integrate(u0, forcing, grid, mask, settings, ts)
        return traj, mask, _elapsed_ms(start)

    runs = _map_radii(_annotated(integrate_one), list(cfg.radii) + [0.0], workers)
    reference = runs[-1][0]

    report = ConvergenceReport(problem="nse", mode="convergence", config=cfg)
    ledgers_ok = True
    for traj, mask, wall_ms in runs:
        ledger = energy_ledger_check(traj, traj.u0_norm_sq, ts.T)
        ledgers_ok = ledgers_ok and ledger.passed
        mean = box_mean(traj.final.u, mask)
        is_reference = traj is reference
        report.rows.append(
            ReportRow(
                r=mask.r,
                grad_norm=math.sqrt(traj.final.grad_sq),
                mean_1=mean[0],
                mean_2=mean[1],
                e_l2=None if is_reference else space_time_distance(traj, reference),
                iters=traj.final.step,
                wall_ms=wall_ms,
            )
        )
        exact_error = None
        if is_reference and cfg.u0 == "taylor_green" and forcing is None:
            exact_error = masked_l2(traj.final.u - taylor_green(traj.final.t, grid))
        report.diagnostics.append(
            DiagnosticRow(
                r=mask.r,
                divergence_residual=traj.max_divergence,
                exact_error=exact_error,
                ledger_passed=ledger.passed,
                ledger_margin=ledger.worst_margin,
            )
        )

    distances = report.column("e_l2")
    report.rates["space_time_distance"] = fit_rate(list(cfg.radii), distances)
    report.checks["distance_decreasing"] = strictly_decreasing(distances)
    report.checks["divergence_free"] = all(
        d.divergence_residual <= 1e-10 for d in report.diagnostics
    )
    report.checks["energy_ledger"] = ledgers_ok
    report.passed = ledgers_ok
    if not ledgers_ok:
        logger.warning("NSE report failed: at least one energy ledger was violated")
    return report

