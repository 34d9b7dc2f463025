"""
Convergence reports and their files.

``write_report`` emits, byte-deterministically for a fixed report:

- ``report.csv``: one row per radius, fixed header, 17 significant digits;
- ``diagnostics.csv``: per-row side quantities (divergence, ledger, ...);
- ``config.echo.toml``: the configuration that produced the report;
- ``plot.gp``: a gnuplot script drawing the error and growth columns on log axes.

Empty CSV fields mean "not applicable" for that row.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

from ptlab import __version__
from ptlab.errors import ReportIoError
from ptlab.lab.config import ExperimentConfig

logger = logging.getLogger(__name__)

REPORT_HEADER = (
    "r",
    "grad_norm",
    "mean_1",
    "mean_2",
    "e_l2",
    "e_h1",
    "lambda_min",
    "c_p",
    "iters",
    "wall_ms",
)
DIAGNOSTICS_HEADER = (
    "r",
    "divergence_residual",
    "perpoinc_ratio",
    "grad_to_forcing",
    "origin_value",
    "exact_error",
    "ledger_passed",
    "ledger_margin",
)

Cell = Union[None, bool, int, float, str]


@dataclass
class ReportRow:
    r: float
    grad_norm: float
    mean_1: float
    mean_2: Optional[float] = None
    e_l2: Optional[float] = None
    e_h1: Optional[float] = None
    lambda_min: Optional[float] = None
    c_p: Optional[float] = None
    iters: int = 0
    wall_ms: float = 0.0


@dataclass
class DiagnosticRow:
    r: float
    divergence_residual: Optional[float] = None
    perpoinc_ratio: Optional[float] = None
    grad_to_forcing: Optional[float] = None
    origin_value: Optional[float] = None
    exact_error: Optional[float] = None
    ledger_passed: Optional[bool] = None
    ledger_margin: Optional[float] = None


@dataclass
class ConvergenceReport:
    """Rows in descending r, the r = 0 reference (if any) last."""

    problem: str
    mode: str
    config: ExperimentConfig
    rows: List[ReportRow] = field(default_factory=list)
    diagnostics: List[DiagnosticRow] = field(default_factory=list)
    rates: Dict[str, float] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    passed: bool = True
    version: str = __version__

    @property
    def radius_rows(self) -> List[ReportRow]:
        return [row for row in self.rows if row.r > 0]

    @property
    def reference_row(self) -> Optional[ReportRow]:
        for row in self.rows:
            if row.r == 0:
                return row
        return None

    def column(self, name: str) -> List[Cell]:
        """Values of one report column over the radius rows (r > 0)."""
        return [getattr(row, name) for row in self.radius_rows]

    def diagnostic(self, name: str) -> List[Cell]:
        return [getattr(d, name) for d in self.diagnostics if d.r > 0]


def format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return format(float(value), ".17g")


def _csv_text(header, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(getattr(row, name)) for name in header])
    return buffer.getvalue()


def report_csv(report: ConvergenceReport) -> str:
    return _csv_text(REPORT_HEADER, report.rows)


def diagnostics_csv(report: ConvergenceReport) -> str:
    return _csv_text(DIAGNOSTICS_HEADER, report.diagnostics)


def plot_script(report: ConvergenceReport) -> str:
    """gnuplot script reading report.csv; skips the header line, columns by position."""
    title = f"{report.problem} ({report.mode}), N={report.config.N}, L={report.config.L:.6g}"
    lines = [
        f"# ptlab {report.version} plot script",
        "# fitted rates (log-log slopes over r > 0):",
    ]
    for name in sorted(report.rates):
        lines.append(f"#   {name} = {format_cell(report.rates[name])}")
    series = [("grad_norm", 2), ("e_l2", 5), ("e_h1", 6), ("c_p", 8)]
    if report.problem == "nse":
        series = [("grad_norm", 2), ("D(r)", 5)]
    plots = ", \\\n     ".join(
        f"'report.csv' skip 1 using 1:{col} with linespoints title '{name}'"
        for name, col in series
    )
    lines += [
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 'r'",
        f"set title '{title}'",
        "set terminal pngcairo size 900,600",
        "set output 'report.png'",
        # r = 0 rows drop out on log axes
        f"plot {plots}",
    ]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIoError(f"cannot write report file ({exc.strerror})", path=path) from exc


def write_report(report: ConvergenceReport, out_dir: Union[str, Path]) -> List[Path]:
    """Write the report files into ``out_dir`` (created if missing).

    Returns:
        The written paths, in a fixed order.

    Raises:
        ReportIoError: a directory or file could not be written.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportIoError(
            f"cannot create output directory ({exc.strerror})", path=out_dir
        ) from exc

    files = [
        ("report.csv", report_csv(report)),
        ("diagnostics.csv", diagnostics_csv(report)),
        ("config.echo.toml", report.config.to_toml()),
        ("plot.gp", plot_script(report)),
    ]
    written = []
    for name, text in files:
        path = out_dir / name
        _write(path, text)
        written.append(path)
    logger.info("Wrote %d report files to %s", len(written), out_dir)
    return written
