#!/usr/bin/env python3
"""
Command-line interface for the punctured-torus lab.
"""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from ptlab import __version__
from ptlab.errors import ConfigError, PtlabError
from ptlab.lab.config import ExperimentConfig
from ptlab.lab.report import ConvergenceReport, format_cell, write_report
from ptlab.lab.sweeps import run_nse_convergence, run_poisson_sweep, run_stokes_sweep
from ptlab.oracles.analytic import annulus_coefficient, annulus_h2_blowup, loglog_bounds

EXIT_OK = 0
EXIT_SOLVER_ERROR = 1
EXIT_CONFIG_ERROR = 2

ORACLE_RADII = (0.2, 0.1, 0.05, 0.025, 0.0125, 1e-3)
ORACLE_EPSILONS = (1e-1, 1e-2, 1e-3, 1e-4)

SWEEPS = {
    "poisson-sweep": ("poisson", run_poisson_sweep),
    "stokes-sweep": ("stokes", run_stokes_sweep),
    "nse-convergence": ("nse", run_nse_convergence),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptlab",
        description="Punctured-torus lab - vanishing-obstacle limits on a periodic box",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s poisson-sweep --config poisson.toml        # Poisson radius sweep
  %(prog)s stokes-sweep --config stokes.toml --out o  # Stokes sweep into ./o
  %(prog)s nse-convergence --config nse.toml -v       # NSE runs with progress logs
  %(prog)s oracles                                    # Closed-form reference table
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, (problem, _) in SWEEPS.items():
        cmd = sub.add_parser(name, help=f"Run the {problem} experiment from a TOML config")
        cmd.add_argument("--config", required=True, type=Path, help="Experiment config (TOML)")
        cmd.add_argument("--out", type=Path, help="Output directory (overrides out_dir)")
        cmd.add_argument(
            "--workers", type=int, default=1, help="Radii solved in parallel (default: 1)"
        )
        cmd.add_argument(
            "--verbose", "-v", action="count", default=0, help="-v for progress, -vv for detail"
        )

    oracles = sub.add_parser("oracles", help="Print the analytic oracle table")
    oracles.add_argument("--verbose", "-v", action="count", default=0)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _print_report(report: ConvergenceReport) -> None:
    print(f"\n{'r':>10} {'grad_norm':>14} {'mean_1':>14} {'e_l2':>14} {'c_p':>12} {'iters':>7}")
    print("-" * 76)
    for row in report.rows:
        cells = [
            f"{row.r:>10.4g}",
            f"{row.grad_norm:>14.6g}",
            f"{row.mean_1:>14.6g}",
            f"{'-' if row.e_l2 is None else format(row.e_l2, '.6g'):>14}",
            f"{'-' if row.c_p is None else format(row.c_p, '.6g'):>12}",
            f"{row.iters:>7d}",
        ]
        print(" ".join(cells))
    if report.rates:
        print("\nFitted rates:")
        for name in sorted(report.rates):
            print(f"  {name:<20} {format_cell(report.rates[name])}")
    for name in sorted(report.checks):
        mark = "✅" if report.checks[name] else "⚠️ "
        print(f"{mark} {name}")


def run_sweep(command: str, args) -> int:
    problem, runner = SWEEPS[command]
    cfg = ExperimentConfig.from_toml(args.config)
    if cfg.problem != problem:
        raise ConfigError(
            f"{command} needs problem = {problem!r}, config has {cfg.problem!r}", key="problem"
        )
    cfg = cfg.with_overrides(out_dir=args.out)

    print(f"🧪 Running {command} ({len(cfg.radii)} radii, N={cfg.N})...")
    report = runner(cfg, workers=max(1, args.workers))
    _print_report(report)

    written = write_report(report, cfg.out_dir)
    print(f"\n📁 Report written to: {cfg.out_dir}")
    for path in written:
        print(f"   {path.name}")

    if not report.passed:
        print("\n❌ Report failed (energy ledger violated)")
        return EXIT_SOLVER_ERROR
    print("\n✅ Done")
    return EXIT_OK


def print_oracles() -> int:
    L = math.pi
    print("\n📐 Log-log witness on the punctured box (L = pi)")
    print(f"{'r':>10} {'l2_lower':>16} {'grad_sq_exact':>16}")
    for r in ORACLE_RADII:
        l2_lower, grad_sq = loglog_bounds(r, L)
        print(f"{r:>10.4g} {l2_lower:>16.10g} {grad_sq:>16.10g}")

    print("\n📐 Annulus eps < rho < 2: H2 seminorm squared")
    print(f"{'eps':>10} {'C':>16} {'value':>16} {'pi C^2/eps^2':>16}")
    for eps in ORACLE_EPSILONS:
        C = annulus_coefficient(eps)
        value = annulus_h2_blowup(eps)
        print(f"{eps:>10.4g} {C:>16.10g} {value:>16.10g} {math.pi * C * C / eps**2:>16.10g}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    try:
        if args.command == "oracles":
            return print_oracles()
        return run_sweep(args.command, args)
    except ConfigError as exc:
        print(f"❌ Config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except tomllib.TOMLDecodeError as exc:
        print(f"❌ Config is not valid TOML: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except PtlabError as exc:
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER_ERROR


if __name__ == "__main__":
    sys.exit(main())
