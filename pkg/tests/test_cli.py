#!/usr/bin/env python3
"""
Tests for the command-line interface and its exit codes
"""

import shutil
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

sys.path.append(str(Path(__file__).parent))

from fixtures.sample_fields import NSE_TOML, POISSON_TOML, write_config  # noqa: E402

from ptlab.cli import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_SOLVER_ERROR, main  # noqa: E402
from ptlab.errors import KrylovStall  # noqa: E402


class TestCli(unittest.TestCase):
    """ptlab subcommands"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.out = Path(self.temp_dir) / "out"

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def run_cli(self, *argv):
        with patch("builtins.print"):
            return main(list(argv))

    def test_oracles(self):
        with patch("builtins.print") as mock_print:
            code = main(["oracles"])
        self.assertEqual(code, EXIT_OK)
        printed = " ".join(str(c.args[0]) for c in mock_print.call_args_list if c.args)
        self.assertIn("l2_lower", printed)
        self.assertIn("pi C^2/eps^2", printed)

    def test_poisson_sweep_writes_report(self):
        config = write_config(self.temp_dir, POISSON_TOML)
        code = self.run_cli("poisson-sweep", "--config", str(config), "--out", str(self.out))
        self.assertEqual(code, EXIT_OK)
        for name in ("report.csv", "diagnostics.csv", "config.echo.toml", "plot.gp"):
            self.assertTrue((self.out / name).exists(), name)

    def test_reads_sys_argv(self):
        config = write_config(self.temp_dir, NSE_TOML)
        argv = ["ptlab", "nse-convergence", "--config", str(config), "--out", str(self.out)]
        with patch("sys.argv", argv), patch("builtins.print"):
            code = main()
        self.assertEqual(code, EXIT_OK)
        self.assertTrue((self.out / "report.csv").exists())

    def test_config_errors_exit_two(self):
        bad_key = write_config(self.temp_dir, 'problem = "poisson"\ncolour = 1\n', "a.toml")
        bad_syntax = write_config(self.temp_dir, 'problem = "poisson\n', "b.toml")
        poisson = write_config(self.temp_dir, POISSON_TOML, "c.toml")
        cases = [
            ("poisson-sweep", bad_key),
            ("poisson-sweep", bad_syntax),
            ("stokes-sweep", poisson),
            ("poisson-sweep", Path(self.temp_dir) / "missing.toml"),
        ]
        for command, path in cases:
            with self.subTest(command=command, path=path.name):
                with patch("sys.stderr"):
                    code = self.run_cli(command, "--config", str(path), "--out", str(self.out))
                self.assertEqual(code, EXIT_CONFIG_ERROR)
        self.assertFalse(self.out.exists())

    @patch("ptlab.lab.sweeps.solve_poisson_obstacle")
    def test_solver_error_exits_one(self, mock_solve):
        mock_solve.side_effect = KrylovStall("stalled", iterations=20000, residual=1e-3)
        config = write_config(self.temp_dir, POISSON_TOML)
        with patch("sys.stderr"):
            code = self.run_cli("poisson-sweep", "--config", str(config), "--out", str(self.out))
        self.assertEqual(code, EXIT_SOLVER_ERROR)

    @patch("ptlab.lab.sweeps.energy_ledger_check")
    def test_failed_ledger_exits_one_but_writes_report(self, mock_check):
        mock_check.return_value.passed = False
        mock_check.return_value.worst_margin = -1.0
        config = write_config(self.temp_dir, NSE_TOML)
        code = self.run_cli("nse-convergence", "--config", str(config), "--out", str(self.out))
        self.assertEqual(code, EXIT_SOLVER_ERROR)
        self.assertTrue((self.out / "report.csv").exists())

    def test_missing_config_argument(self):
        with patch("sys.stderr"):
            with self.assertRaises(SystemExit) as ctx:
                main(["poisson-sweep"])
        self.assertEqual(ctx.exception.code, 2)


if __name__ == "__main__":
    unittest.main()
