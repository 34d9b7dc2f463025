#!/usr/bin/env python3
"""
Tests for the closed-form reference objects
"""

import math
import sys
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest
from scipy.integrate import IntegrationWarning

sys.path.append(str(Path(__file__).parent))

from ptlab.core.grid import build_grid, build_obstacle_mask  # noqa: E402
from ptlab.core.spectral import divergence, masked_h1_seminorm, masked_l2  # noqa: E402
from ptlab.errors import (  # noqa: E402
    IncompatibleBox,
    InvalidEpsilon,
    InvalidRadius,
    ObstacleTooLarge,
    QuadratureNotConverged,
)
from ptlab.oracles.analytic import (  # noqa: E402
    annulus_coefficient,
    annulus_h2_blowup,
    annulus_solution,
    loglog_bounds,
    loglog_field,
    loglog_grad_sq_quadrature,
    loglog_profile,
    loglog_tail_integral,
    taylor_green,
)


def annulus_closed_form(eps: float) -> float:
    """2 pi int_eps^2 rho (u'/rho)^2 with u'/rho = 1/2 - rho/4 + C/rho^2, term by term."""
    C = annulus_coefficient(eps)

    def G(rho):
        return rho**2 / 8 - rho**3 / 12 + rho**4 / 64

    singular = math.pi * C * C * (1 / eps**2 - 0.25)
    cross = 4 * math.pi * C * (0.5 * math.log(2 / eps) - (2 - eps) / 4)
    smooth = 2 * math.pi * (G(2.0) - G(eps))
    return singular + cross + smooth


class TestLogLogWitness(unittest.TestCase):
    """The log(1 + log(rho/r)) witness and its bounds"""

    def test_l2_lower_bound_value(self):
        l2_lower, _ = loglog_bounds(0.05, math.pi)
        expected = math.pi**2 / 4 * math.log(1 + math.log(math.pi / 0.1)) ** 2
        self.assertAlmostEqual(l2_lower, expected, places=12)
        self.assertAlmostEqual(l2_lower, 5.495, delta=1e-3)

    def test_gradient_formula_matches_quadrature(self):
        for r in (0.1, 0.01, 1e-3):
            with self.subTest(r=r):
                _, exact = loglog_bounds(r, math.pi)
                self.assertAlmostEqual(loglog_grad_sq_quadrature(r, math.pi), exact, delta=1e-8)

    def test_gradient_energy_stays_bounded(self):
        values = [loglog_bounds(r, math.pi)[1] for r in (0.1, 0.01, 1e-3, 1e-6)]
        self.assertTrue(all(b > a for a, b in zip(values, values[1:])))
        self.assertLess(values[-1], 2 * math.pi)

    def test_tail_integral_is_one(self):
        self.assertAlmostEqual(loglog_tail_integral(), 1.0, delta=1e-8)

    def test_profile_vanishes_on_circle(self):
        profile = loglog_profile(0.1, 1.0)
        self.assertEqual(float(profile(0.1)), 0.0)
        self.assertAlmostEqual(profile.outer, math.sqrt(2.0))
        self.assertAlmostEqual(float(profile.derivative(0.1)), 10.0)

    def test_admissibility(self):
        with self.assertRaises(InvalidRadius):
            loglog_bounds(0.0, 1.0)
        with self.assertRaises(ObstacleTooLarge):
            loglog_bounds(0.6, 1.0)

    def test_field_sampling(self):
        grid = build_grid(math.pi, 64)
        profile, field = loglog_field(0.5, math.pi, grid)
        mask = build_obstacle_mask(grid, 0.5)
        self.assertTrue(np.all(field.values[mask.chi == 1.0] == 0.0))
        self.assertTrue(np.all(field.values >= 0.0))
        self.assertEqual(profile.inner, 0.5)
        self.assertIsNone(loglog_field(0.5, math.pi)[1])

    def test_field_on_other_box(self):
        with self.assertRaises(IncompatibleBox):
            loglog_field(0.1, math.pi, build_grid(1.0, 16))

    @pytest.mark.slow
    def test_sampled_ratio_grows_as_radius_shrinks(self):
        grid = build_grid(math.pi, 512)
        ratios = []
        for r in (0.1, 0.05, 0.025, 0.0125):
            mask = build_obstacle_mask(grid, r)
            _, field = loglog_field(r, math.pi, grid)
            ratios.append(masked_l2(field, mask) / masked_h1_seminorm(field, mask))
            l2_lower, _ = loglog_bounds(r, math.pi)
            self.assertGreaterEqual(masked_l2(field, mask) ** 2, l2_lower - 10 * grid.h)
        self.assertTrue(all(b > a for a, b in zip(ratios, ratios[1:])))


class TestAnnulus(unittest.TestCase):
    """Radial annulus solution and its H2 blow-up"""

    def test_coefficient(self):
        self.assertAlmostEqual(annulus_coefficient(0.01), -0.06291, delta=1e-5)

    def test_boundary_values_and_equation(self):
        for eps in (0.1, 0.05, 1e-2, 1e-3):
            with self.subTest(eps=eps):
                p = annulus_solution(eps).profile
                self.assertLessEqual(abs(float(p(eps))), 1e-12)
                self.assertLessEqual(abs(float(p(2.0))), 1e-12)
                # clustered towards the hole where u'' and u'/rho nearly cancel
                rho = np.geomspace(eps, 2.0, 1000)
                lhs = p.second_derivative(rho) + p.derivative(rho) / rho
                np.testing.assert_allclose(lhs, 1 - 0.75 * rho, rtol=0.0, atol=1e-8)

    def test_blowup_matches_closed_form(self):
        for eps in (1e-1, 1e-2, 1e-3):
            with self.subTest(eps=eps):
                expected = annulus_closed_form(eps)
                self.assertAlmostEqual(annulus_h2_blowup(eps) / expected, 1.0, delta=1e-6)

    def test_leading_term(self):
        C = annulus_coefficient(0.01)
        self.assertAlmostEqual(math.pi * C * C / 0.01**2, 124.3, delta=0.1)
        for eps in (1e-2, 1e-3):
            with self.subTest(eps=eps):
                C = annulus_coefficient(eps)
                leading = math.pi * C * C / eps**2
                self.assertAlmostEqual(annulus_h2_blowup(eps) / leading, 1.0, delta=0.1)

    def test_scaling_between_small_holes(self):
        ratio = annulus_h2_blowup(1e-4) / annulus_h2_blowup(1e-3)
        expected = 100 * (math.log(2000) / math.log(20000)) ** 2
        self.assertAlmostEqual(ratio / expected, 1.0, delta=0.15)

    def test_unbounded(self):
        values = [annulus_h2_blowup(eps) for eps in (1e-2, 1e-3, 1e-4)]
        self.assertTrue(values[0] < values[1] < values[2])

    def test_invalid_epsilon(self):
        for eps in (0.0, -0.5, 2.0, float("nan")):
            with self.subTest(eps=eps):
                with self.assertRaises(InvalidEpsilon):
                    annulus_h2_blowup(eps)

    def test_quad_points_floor(self):
        with self.assertRaises(ValueError):
            annulus_h2_blowup(0.1, quad_points=10)

    @patch("ptlab.oracles.analytic.quad")
    def test_quadrature_warning_is_reported(self, mock_quad):
        mock_quad.side_effect = IntegrationWarning("roundoff error is detected")
        with self.assertRaises(QuadratureNotConverged):
            annulus_h2_blowup(0.01)

    @patch("ptlab.oracles.analytic.quad")
    def test_loose_error_estimate_is_reported(self, mock_quad):
        mock_quad.return_value = (100.0, 1.0)
        with self.assertRaises(QuadratureNotConverged):
            annulus_h2_blowup(0.01)


class TestTaylorGreen(unittest.TestCase):
    def test_energy_and_divergence(self):
        grid = build_grid(math.pi, 32)
        u = taylor_green(0.25, grid)
        self.assertAlmostEqual(masked_l2(u) ** 2, 2 * math.pi**2 * math.exp(-1.0), places=10)
        self.assertLess(masked_l2(divergence(u)), 1e-12)

    def test_needs_two_pi_box(self):
        with self.assertRaises(IncompatibleBox):
            taylor_green(0.0, build_grid(1.0, 16))


if __name__ == "__main__":
    unittest.main()
