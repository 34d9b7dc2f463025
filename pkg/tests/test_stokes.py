#!/usr/bin/env python3
"""
Tests for the penalized Stokes solver and pressure recovery
"""

import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.append(str(Path(__file__).parent))

from fixtures.sample_fields import (  # noqa: E402
    dense_matrix,
    gradient_vector,
    shear_vector,
    small_grid,
)

from ptlab.core.grid import build_obstacle_mask, empty_mask  # noqa: E402
from ptlab.core.spectral import VectorField, box_mean, divergence, masked_l2  # noqa: E402
from ptlab.errors import KrylovStall, NonZeroMean  # noqa: E402
from ptlab.solvers.krylov import SolverSettings  # noqa: E402
from ptlab.solvers.stokes import (  # noqa: E402
    ProjectedPenalizedOperator,
    momentum_residual,
    recover_pressure,
    solve_stokes_obstacle,
)


class TestStokesSolver(unittest.TestCase):
    """solve_stokes_obstacle"""

    def setUp(self):
        self.grid = small_grid()
        self.f = shear_vector(self.grid) + gradient_vector(self.grid)

    def test_matches_dense_solve(self):
        settings = SolverSettings()
        mask = build_obstacle_mask(self.grid, 0.4)
        op = ProjectedPenalizedOperator(self.grid, mask, settings)
        self.assertEqual(op.size, 2048)
        B = dense_matrix(op.apply, op.size)
        P = dense_matrix(op.project, op.size)
        # I - P fixes the gradient part of the solution to zero
        expected = np.linalg.solve(B + np.eye(op.size) - P, P @ self.f.values.ravel())

        sol = solve_stokes_obstacle(self.f, self.grid, mask, settings)
        error = np.linalg.norm(sol.u.values.ravel() - expected) / np.linalg.norm(expected)
        self.assertLess(error, 1e-7)

    def test_velocity_is_divergence_free(self):
        mask = build_obstacle_mask(self.grid, 0.5)
        sol = solve_stokes_obstacle(self.f, self.grid, mask)
        self.assertLessEqual(sol.divergence_residual, 1e-10)
        self.assertLess(masked_l2(divergence(sol.u)), 1e-10 * masked_l2(sol.u))

    def test_momentum_balance_closes(self):
        settings = SolverSettings()
        mask = build_obstacle_mask(self.grid, 0.5)
        sol = solve_stokes_obstacle(self.f, self.grid, mask, settings)
        res = momentum_residual(sol.u, sol.p, self.f, mask, settings)
        self.assertLess(masked_l2(res), 1e-8 * masked_l2(self.f))
        self.assertAlmostEqual(box_mean(sol.p), 0.0, places=12)

    def test_limit_problem(self):
        sol = solve_stokes_obstacle(self.f, self.grid, empty_mask(self.grid))
        # shear is an eigenfield with |k|^2 = 1; the gradient goes to the pressure
        np.testing.assert_allclose(sol.u.values, shear_vector(self.grid).values, atol=1e-12)
        X, Y = self.grid.mesh
        np.testing.assert_allclose(sol.p.values, np.sin(X) * np.sin(Y), atol=1e-12)
        self.assertEqual(sol.iterations, 0)

    def test_limit_problem_rejects_mean(self):
        f = VectorField.constant(self.grid, (1.0, 0.0))
        with self.assertRaises(NonZeroMean):
            solve_stokes_obstacle(f, self.grid, empty_mask(self.grid))

    def test_constant_forcing_is_solvable_with_obstacle(self):
        f = VectorField.constant(self.grid, (1.0, 0.0))
        mask = build_obstacle_mask(self.grid, 0.5)
        sol = solve_stokes_obstacle(f, self.grid, mask)
        # the disc drags against the flow; the mean velocity stays along +x
        self.assertGreater(sol.mean[0], 0.0)
        self.assertAlmostEqual(sol.mean[1], 0.0, places=10)

    def test_pressure_of_pure_gradient(self):
        mask = empty_mask(self.grid)
        u = VectorField.constant(self.grid)
        p = recover_pressure(u, gradient_vector(self.grid), mask)
        X, Y = self.grid.mesh
        np.testing.assert_allclose(p.values, np.sin(X) * np.sin(Y), atol=1e-12)

    def test_krylov_stall_propagates(self):
        mask = build_obstacle_mask(self.grid, 0.5)
        with self.assertRaises(KrylovStall):
            solve_stokes_obstacle(self.f, self.grid, mask, SolverSettings(cg_max_iter=1))


if __name__ == "__main__":
    unittest.main()
