import math
import unittest

import numpy as np
from scipy.special import gamma as gamma_fn

from errors import ConvergenceError, DomainError, ParameterError
from rde import (DynamicsConfig, GammaGrid, GOperatorConfig, PopulationDynamics, ResolventPool, apply_G_operator, c_alpha,
                 fixed_point_constant, norm_beta_eps, rde_frac_moment_stats, real_axis_law_samples, sample_poisson_weights,
                 solve_real_axis_ab, truncated_tail_mean, unit_subordinator_sigma, vanishing_imag_diagnostic)
from stable import StableSampler


class TestPoissonWeights(unittest.TestCase):

    def test_weights_decrease(self):
        weights = sample_poisson_weights(0.8, 50, np.random.default_rng(1))
        self.assertEqual(weights.weights.size, 50)
        self.assertTrue(np.all(np.diff(weights.weights) < 0.0))
        self.assertTrue(np.all(weights.weights > 0.0))
        self.assertAlmostEqual(weights.total, float(np.sum(weights.weights)))

    def test_tail_mean(self):
        self.assertTrue(math.isinf(truncated_tail_mean(0.5, 2)))
        small = truncated_tail_mean(0.5, 200)
        large = truncated_tail_mean(0.5, 400)
        self.assertGreater(small, large)
        self.assertGreater(large, 0.0)

    def test_rejects_empty_truncation(self):
        with self.assertRaises(ParameterError):
            sample_poisson_weights(0.8, 0, np.random.default_rng(1))


class TestPopulation(unittest.TestCase):

    def test_deterministic_pool_moment(self):
        pool = ResolventPool(samples=np.full(10, 1j), z=1j, alpha=1.0)
        for angle in (0.0, 0.4, math.pi / 2.0):
            u = complex(math.cos(angle), math.sin(angle))
            value, error = rde_frac_moment_stats(pool, u, 0.5)
            self.assertAlmostEqual(value, gamma_fn(0.5) * (math.cos(angle) + math.sin(angle)) ** 0.5, places=12)
            self.assertAlmostEqual(error, 0.0, places=12)

    def test_initial_pool(self):
        pool = ResolventPool.initial(2.0 + 1.0j, 0.5, 4)
        self.assertTrue(np.allclose(pool.samples, -1.0 / (2.0 + 1.0j)))
        with self.assertRaises(DomainError):
            ResolventPool.initial(2.0, 0.5, 4)
        with self.assertRaises(ParameterError):
            ResolventPool.initial(1j, 0.5, 0)

    def test_zero_truncation_gives_free_resolvent(self):
        config = DynamicsConfig(pool_size=8, truncation=0, burn_in=0, generations=1, chunk_size=4, workers=1)
        dynamics = PopulationDynamics(1.0, config)
        z = 0.5 + 2.0j
        pool, resampled = dynamics.step(ResolventPool.initial(z, 1.0, 8), seed=1)
        self.assertEqual(resampled, 0)
        self.assertEqual(pool.generation, 1)
        self.assertTrue(np.allclose(pool.samples, -1.0 / z))

    def test_independent_of_workers(self):
        base = dict(pool_size=2000, truncation=50, burn_in=2, generations=3, chunk_size=500)
        first = PopulationDynamics(0.8, DynamicsConfig(workers=1, **base)).run(1.0 + 0.5j, seed=5)
        second = PopulationDynamics(0.8, DynamicsConfig(workers=3, **base)).run(1.0 + 0.5j, seed=5)
        self.assertTrue(np.array_equal(first.pool.samples, second.pool.samples))
        self.assertEqual(len(first.history), 5)
        self.assertTrue(np.all(first.pool.samples.imag >= 0.0))

    def test_stationarity_statistic(self):
        base = dict(pool_size=2000, truncation=40, burn_in=2, chunk_size=500, workers=1)
        run = PopulationDynamics(0.8, DynamicsConfig(generations=4, **base)).run(1.0 + 0.5j, seed=8)
        self.assertTrue(0.0 <= run.stationarity_ks <= 1.0)
        self.assertAlmostEqual(run.ks_threshold, 1.95 * math.sqrt(2.0 / 2000))
        self.assertEqual(run.stationary, run.stationarity_ks <= 2.0 * run.ks_threshold)
        self.assertAlmostEqual(run.average('mean_abs_frac', 3), float(np.mean([s.mean_abs_frac for s in run.history[-3:]])))
        short = PopulationDynamics(0.8, DynamicsConfig(generations=1, **base)).run(1.0 + 0.5j, seed=8)
        self.assertTrue(math.isnan(short.stationarity_ks))
        self.assertFalse(short.stationary)

    def test_vanishing_imag_table(self):
        config = DynamicsConfig(pool_size=2000, truncation=40, burn_in=2, generations=4, chunk_size=500, workers=1,
                                average_generations=3)
        etas = [0.1, 0.05, 0.02]
        table = vanishing_imag_diagnostic(PopulationDynamics(0.5, config), 2.0, etas, seed=7)
        self.assertEqual(table.etas, tuple(etas))
        self.assertEqual(table.generations, 6)
        self.assertEqual(len(table.diagnostics['stationarity_ks']), 3)
        for eta, im_value, abs_value in zip(table.etas, table.mean_im_frac, table.mean_abs_frac):
            self.assertGreater(im_value, 0.0)
            self.assertLessEqual(im_value, eta ** -0.25)
            self.assertGreaterEqual(abs_value, im_value)
        self.assertTrue(math.isfinite(table.slope))
        with self.assertRaises(ParameterError):
            vanishing_imag_diagnostic(PopulationDynamics(0.5, config), 2.0, [0.1, -0.1], seed=7)

    def test_dynamics_config_from_config(self):
        config = DynamicsConfig.from_config({'pool_size': '100', 'operator': {}, 'truncation': 20})
        self.assertEqual(config.pool_size, 100)
        self.assertEqual(config.truncation, 20)
        self.assertEqual(config.burn_in, DynamicsConfig().burn_in)


class TestOperator(unittest.TestCase):

    def test_c_alpha(self):
        self.assertAlmostEqual(c_alpha(0.5), 0.0261, delta=1e-4)
        self.assertAlmostEqual(fixed_point_constant(0.5), c_alpha(0.5) * gamma_fn(0.75), places=12)

    def test_norm_of_constant(self):
        grid = GammaGrid.from_function(0.5, 17, lambda angle: 0.7)
        self.assertAlmostEqual(norm_beta_eps(grid, 0.5, 0.0), 0.7, places=12)
        self.assertAlmostEqual(norm_beta_eps(grid, 0.5, 0.0, variant='beta'), 0.7, places=12)

    def test_norm_homogeneity(self):
        grid = GammaGrid.from_function(0.5, 17, lambda angle: 1.0 + 0.3 * math.cos(2.0 * angle))
        self.assertAlmostEqual(norm_beta_eps(grid.scaled(3.0), 0.5, 0.1), 3.0 * norm_beta_eps(grid, 0.5, 0.1), places=10)

    def test_norm_arguments(self):
        small = GammaGrid.from_function(0.5, 5, lambda angle: 1.0)
        with self.assertRaises(ParameterError):
            norm_beta_eps(small, 0.5)
        grid = GammaGrid.from_function(0.5, 17, lambda angle: 1.0)
        with self.assertRaises(ParameterError):
            norm_beta_eps(grid, 0.1)
        with self.assertRaises(ParameterError):
            norm_beta_eps(grid, 0.5, -0.1)
        with self.assertRaises(ParameterError):
            norm_beta_eps(grid, 0.5, variant='sup')

    def test_grid_cone_check(self):
        with self.assertRaises(DomainError):
            GammaGrid.from_function(0.5, 9, lambda angle: -1.0)
        grid = GammaGrid.from_function(0.5, 9, lambda angle: 1.0)
        difference = grid.minus(grid.scaled(2.0))
        self.assertTrue(difference.difference)
        self.assertAlmostEqual(difference.sup_norm(), 1.0)

    def test_grid_from_pool(self):
        pool = ResolventPool(samples=np.full(10, 1j), z=1j, alpha=0.5)
        grid = GammaGrid.from_pool(pool, points=9)
        expected = gamma_fn(0.75) * (np.cos(grid.angles) + np.sin(grid.angles)) ** 0.25
        self.assertTrue(np.allclose(grid.values, expected))

    def test_apply_operator(self):
        grid = GammaGrid.from_function(0.5, 9, lambda angle: 0.5 + 0.1 * math.sin(2.0 * angle))
        cfg = GOperatorConfig(n_theta=8, n_y=8, n_r=16, tolerance=1e-2, workers=2)
        image = apply_G_operator(grid, 10.0 + 0.5j, cfg)
        self.assertEqual(image.size, grid.size)
        self.assertTrue(np.all(np.isfinite(image.values)))
        self.assertTrue(np.all(image.errors >= 0.0))
        with self.assertRaises(DomainError):
            apply_G_operator(grid, -1j, cfg)
        with self.assertRaises(ParameterError):
            apply_G_operator(GammaGrid.from_function(1.2, 9, lambda angle: 1.0), 1j, cfg)

    def test_operator_config(self):
        cfg = GOperatorConfig.from_config({'n_theta': 16, 'workers': 1})
        self.assertEqual(cfg.n_theta, 16)
        self.assertEqual(cfg.halved().n_theta, 8)


class TestRealAxis(unittest.TestCase):

    def test_subordinator_laplace(self):
        alpha = 0.5
        draws = StableSampler.sample_pos_stable(alpha / 2.0, unit_subordinator_sigma(alpha), 200000, np.random.default_rng(4))
        self.assertAlmostEqual(float(np.mean(np.exp(-draws))), math.exp(-gamma_fn(1.0 - alpha / 2.0)), delta=0.01)

    def test_swap_symmetry(self):
        positive = solve_real_axis_ab(0.5, 10.0, 2000, seed=3)
        negative = solve_real_axis_ab(0.5, -10.0, 2000, seed=3)
        self.assertEqual(positive.a, negative.b)
        self.assertEqual(positive.b, negative.a)
        self.assertEqual(positive.residuals, negative.residuals[::-1])
        self.assertGreater(positive.b, positive.a)
        self.assertGreater(positive.averaged, 0)
        self.assertLessEqual(positive.iterations, 5000)
        self.assertTrue(math.isfinite(positive.a) and math.isfinite(positive.b))
        self.assertGreater(positive.standard_errors[1], 0.0)

    def test_running_mean_must_settle(self):
        with self.assertRaises(ConvergenceError) as context:
            solve_real_axis_ab(0.5, 10.0, 200, seed=3, burn_in=0, check_every=1, max_iter=1)
        self.assertIn('trace', context.exception.details)
        with self.assertRaises(ParameterError):
            solve_real_axis_ab(0.5, 10.0, 200, seed=3, tolerance=0.0)
        with self.assertRaises(ParameterError):
            solve_real_axis_ab(0.5, 10.0, 200, seed=3, burn_in=10, max_iter=10)

    def test_law_samples(self):
        solution = solve_real_axis_ab(0.5, 10.0, 2000, seed=3)
        samples = real_axis_law_samples(solution, 100, np.random.default_rng(9))
        self.assertEqual(samples.size, 100)
        self.assertTrue(np.all(samples.imag == 0.0))

    def test_rejects_bad_arguments(self):
        with self.assertRaises(ParameterError):
            solve_real_axis_ab(0.7, 10.0, 100, seed=1)
        with self.assertRaises(ParameterError):
            solve_real_axis_ab(0.5, 0.0, 100, seed=1)
        with self.assertRaises(ParameterError):
            solve_real_axis_ab(0.5, 10.0, 1, seed=1)


if __name__ == '__main__':
    unittest.main()
