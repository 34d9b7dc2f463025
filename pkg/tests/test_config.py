#!/usr/bin/env python3
"""
Tests for experiment configuration loading and validation
"""

import math
import shutil
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

sys.path.append(str(Path(__file__).parent))

from fixtures.sample_fields import NSE_TOML, POISSON_TOML, STOKES_TOML, write_config  # noqa: E402

from ptlab.core.spectral import ScalarField, VectorField, box_mean  # noqa: E402
from ptlab.errors import ConfigError  # noqa: E402
from ptlab.lab.config import DEFAULT_RADII, ExperimentConfig, build_forcing  # noqa: E402


class TestLoadConfig(unittest.TestCase):
    """Reading TOML files"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_poisson_config(self):
        cfg = ExperimentConfig.from_toml(write_config(self.temp_dir, POISSON_TOML))
        self.assertEqual(cfg.problem, "poisson")
        self.assertEqual(cfg.N, 32)
        self.assertEqual(cfg.radii, (0.8, 0.4))
        self.assertEqual(cfg.out_dir, Path("out"))
        self.assertEqual(cfg.mode, "convergence")

    def test_defaults(self):
        cfg = ExperimentConfig.from_toml(write_config(self.temp_dir, STOKES_TOML))
        self.assertEqual(cfg.L, math.pi)
        self.assertEqual(cfg.eta, 1e-6)
        self.assertEqual(cfg.forcing, "zero_mean_trig")
        self.assertEqual(ExperimentConfig(problem="poisson").radii, DEFAULT_RADII)
        self.assertEqual(ExperimentConfig(problem="nse").forcing, "zero")

    def test_nse_table(self):
        cfg = ExperimentConfig.from_toml(write_config(self.temp_dir, NSE_TOML))
        self.assertEqual(cfg.u0, "taylor_green")
        self.assertEqual(cfg.T, 0.02)
        self.assertEqual(cfg.time_settings.n_steps, 4)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_toml(Path(self.temp_dir) / "absent.toml")

    def test_syntax_error_surfaces_as_toml_error(self):
        path = write_config(self.temp_dir, 'problem = "poisson\nN = 32\n')
        with self.assertRaises(tomllib.TOMLDecodeError):
            ExperimentConfig.from_toml(path)

    def test_echo_reads_back(self):
        cfg = ExperimentConfig(
            problem="stokes",
            N=16,
            radii=(0.5, 0.25),
            forcing=[[1, 0, 1, 1.0, 0.0], [2, 1, 0, 0.5, 0.0]],
        )
        path = write_config(self.temp_dir, cfg.to_toml(), name="echo.toml")
        self.assertEqual(ExperimentConfig.from_toml(path), cfg)
        self.assertTrue(cfg.to_toml().startswith("# ptlab "))


class TestValidation(unittest.TestCase):
    """Every violation names its key"""

    def assertConfigError(self, data, key):
        with self.assertRaises(ConfigError) as ctx:
            ExperimentConfig.from_dict(data)
        self.assertEqual(ctx.exception.key, key)

    def test_unknown_keys(self):
        self.assertConfigError({"problem": "poisson", "viscosity": 1.0}, "viscosity")
        self.assertConfigError({"problem": "nse", "nse": {"nu": 1.0}}, "nse.nu")

    def test_problem(self):
        self.assertConfigError({}, "problem")
        self.assertConfigError({"problem": "heat"}, "problem")

    def test_grid_keys(self):
        self.assertConfigError({"problem": "poisson", "N": 33}, "N")
        self.assertConfigError({"problem": "poisson", "N": 32.0}, "N")
        self.assertConfigError({"problem": "poisson", "L": -1.0}, "L")
        self.assertConfigError({"problem": "poisson", "L": "pi"}, "L")

    def test_radii(self):
        self.assertConfigError({"problem": "poisson", "radii": [0.1, 0.2]}, "radii")
        self.assertConfigError({"problem": "poisson", "radii": [0.2, 0.2]}, "radii")
        self.assertConfigError({"problem": "poisson", "radii": [0.0]}, "radii")
        self.assertConfigError({"problem": "poisson", "L": 1.0, "radii": [0.6]}, "radii")
        self.assertConfigError({"problem": "poisson", "radii": 0.1}, "radii")

    def test_forcing(self):
        self.assertConfigError({"problem": "poisson", "forcing": "gaussian"}, "forcing")
        self.assertConfigError({"problem": "poisson", "forcing": []}, "forcing")
        self.assertConfigError({"problem": "poisson", "forcing": [[2, 1, 1, 1.0, 0.0]]}, "forcing")
        self.assertConfigError({"problem": "stokes", "forcing": [[3, 1, 1, 1.0, 0.0]]}, "forcing")
        self.assertConfigError({"problem": "stokes", "forcing": [[1, 1.5, 1, 1.0, 0.0]]}, "forcing")
        self.assertConfigError({"problem": "stokes", "forcing": [[1, 1, 1]]}, "forcing")

    def test_numeric_keys(self):
        self.assertConfigError({"problem": "poisson", "eta": 0.0}, "eta")
        self.assertConfigError({"problem": "poisson", "eta": "small"}, "eta")
        self.assertConfigError({"problem": "nse", "nse": {"dt": 0.0}}, "nse.dt")
        self.assertConfigError({"problem": "nse", "nse": {"T": 0.1, "dt": 0.2}}, "nse.dt")
        self.assertConfigError({"problem": "nse", "nse": {"u0": "vortex"}}, "nse.u0")
        self.assertConfigError({"problem": "poisson", "out_dir": 3}, "out_dir")


class TestForcing(unittest.TestCase):
    """Built-in and custom forcings"""

    def test_zero_mean_trig(self):
        cfg = ExperimentConfig(problem="stokes", N=32)
        f = build_forcing(cfg, cfg.grid)
        self.assertIsInstance(f, VectorField)
        np.testing.assert_allclose(box_mean(f), (0.0, 0.0), atol=1e-15)
        self.assertEqual(cfg.mode, "convergence")

    def test_constant_forcing_is_blowup_mode(self):
        cfg = ExperimentConfig(problem="poisson", N=32, forcing="constant")
        f = build_forcing(cfg, cfg.grid)
        self.assertIsInstance(f, ScalarField)
        self.assertEqual(box_mean(f), 1.0)
        self.assertEqual(cfg.mode, "blowup")

    def test_custom_terms(self):
        cfg = ExperimentConfig(
            problem="stokes", N=16, L=1.0, forcing=[[2, 1, 0, 0.0, 2.0], [2, 0, 0, 0.5, 0.0]]
        )
        f = build_forcing(cfg, cfg.grid)
        X, _ = cfg.grid.mesh
        np.testing.assert_allclose(f.values[0], 0.0)
        np.testing.assert_allclose(f.values[1], 2.0 * np.sin(math.pi * X) + 0.5)
        self.assertEqual(cfg.mode, "blowup")


if __name__ == "__main__":
    unittest.main()
