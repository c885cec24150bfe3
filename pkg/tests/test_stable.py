import math
import unittest

import numpy as np

from errors import DomainError, ParameterError
from stable import StableParams, StableSampler, check_alpha, v_alpha, w_alpha


class TestStableParams(unittest.TestCase):

    def test_check_alpha_rejects_endpoints(self):
        for alpha in (0.0, 2.0, -1.0, float('nan'), 'abc'):
            with self.assertRaises(ParameterError):
                check_alpha(alpha)
        self.assertEqual(check_alpha(1.5), 1.5)
        with self.assertRaises(ParameterError):
            check_alpha(1.0, upper=1.0)

    def test_w_alpha_cauchy(self):
        self.assertAlmostEqual(w_alpha(1.0), math.pi, places=12)

    def test_v_alpha_half(self):
        self.assertAlmostEqual(v_alpha(0.5), math.sqrt(2.0), places=12)

    def test_entry_law_scale(self):
        params = StableParams.entry_law(1.5)
        self.assertAlmostEqual(params.sigma ** 1.5, w_alpha(1.5), places=12)
        with self.assertRaises(ParameterError):
            StableParams(alpha=1.5, beta=2.0)
        with self.assertRaises(ParameterError):
            StableParams(alpha=1.5, sigma=0.0)
        with self.assertRaises(ParameterError):
            StableParams(alpha=1.5).v_alpha


class TestStableSampler(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(12345)

    def test_characteristic_function(self):
        alpha = 1.5
        draws = StableSampler.sample_sym_stable(alpha, 200000, self.rng)
        for t in (0.5, 1.0):
            empirical = float(np.mean(np.cos(t * draws)))
            self.assertAlmostEqual(empirical, math.exp(-w_alpha(alpha) * t ** alpha), delta=0.01)

    def test_one_sided_tail(self):
        alpha, t = 1.2, 30.0
        draws = StableSampler.sample_sym_stable(alpha, 1000000, self.rng)
        self.assertAlmostEqual(t ** alpha * float(np.mean(draws >= t)), 1.0, delta=0.1)

    def test_empty_and_negative_counts(self):
        self.assertEqual(StableSampler.sample_sym_stable(1.5, 0, self.rng).size, 0)
        with self.assertRaises(ParameterError):
            StableSampler.sample_sym_stable(1.5, -1, self.rng)

    def test_positive_stable_laplace(self):
        draws = StableSampler.sample_pos_stable(0.5, 1.0, 200000, self.rng)
        self.assertTrue(np.all(draws > 0.0))
        self.assertAlmostEqual(float(np.mean(np.exp(-draws))), math.exp(-math.sqrt(2.0)), delta=0.01)

    def test_positive_stable_rejects_bad_index(self):
        with self.assertRaises(ParameterError):
            StableSampler.sample_pos_stable(1.2, 1.0, 10, self.rng)
        with self.assertRaises(ParameterError):
            StableSampler.sample_pos_stable(0.5, -1.0, 10, self.rng)

    def test_quadratic_form_of_zero_matrix(self):
        norm_sq, factor = StableSampler.quadratic_form_samples(np.zeros((3, 3)), 1.5, 10, self.rng)
        self.assertTrue(np.all(norm_sq == 0.0))
        self.assertTrue(np.all(factor > 0.0))

    def test_quadratic_form_matches_square(self):
        alpha, count = 1.5, 50000
        matrix = np.diag([1.0, 0.0])
        norm_sq, factor = StableSampler.quadratic_form_samples(matrix, alpha, count, self.rng)
        direct = StableSampler.sample_sym_stable(alpha, count, self.rng) ** 2
        self.assertAlmostEqual(float(np.mean(norm_sq * factor <= 1.0)), float(np.mean(direct <= 1.0)), delta=0.02)

    def test_quadratic_form_split_product(self):
        split = StableSampler.quadratic_form_split(np.eye(2), 1.5, self.rng)
        self.assertAlmostEqual(split.product, split.gauss_norm_sq * split.stable_factor)

    def test_quadratic_form_rejects_indefinite(self):
        with self.assertRaises(DomainError):
            StableSampler.quadratic_form_samples(np.diag([1.0, -1.0]), 1.5, 5, self.rng)


class TestInverseStableSeries(unittest.TestCase):
    # At alpha = 1/2 and sigma = 1 the law is that of 1/Z^2, so E exp(c S^{-1}) = (1 - 2c)^{-1/2}.

    def test_small_constant(self):
        result = StableSampler.inverse_stable_exp_moment(1e-8, 0.5, 1.0, 50)
        self.assertFalse(result.diverged)
        self.assertAlmostEqual(result.value, 1.0, places=7)

    def test_closed_form(self):
        result = StableSampler.inverse_stable_exp_moment(0.1, 0.5, 1.0, 400)
        self.assertFalse(result.diverged)
        self.assertAlmostEqual(result.value, 1.0 / math.sqrt(0.8), places=8)

    def test_critical_constant(self):
        self.assertAlmostEqual(StableSampler.critical_constant(0.5, 1.0), 0.5, places=12)

    def test_divergence_flag(self):
        result = StableSampler.inverse_stable_exp_moment(0.6, 0.5, 1.0, 400)
        self.assertTrue(result.diverged)
        self.assertTrue(math.isinf(result.value))
        self.assertAlmostEqual(result.critical_c, 0.5, places=12)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(ParameterError):
            StableSampler.inverse_stable_exp_moment(0.1, 0.5, 1.0, 5)
        with self.assertRaises(ParameterError):
            StableSampler.inverse_stable_exp_moment(-0.1, 0.5, 1.0, 50)
        with self.assertRaises(ParameterError):
            StableSampler.inverse_stable_exp_moment(0.1, 1.5, 1.0, 50)


class TestIdentities(unittest.TestCase):

    def test_weighted_squares_laplace(self):
        rng = np.random.default_rng(7)
        direct, gaussian = StableSampler.weighted_squares_laplace([0.5, 1.0 + 0.5j], 1.2, 100000, rng)
        self.assertLess(abs(direct - gaussian), 0.02)

    def test_negative_moment_table(self):
        rng = np.random.default_rng(8)
        table = StableSampler.negative_moment_ratio(1.5, 0.5, [1.0, 10.0], [0.1, 1.0, 5.0], 20000, rng)
        self.assertEqual(table.shape, (3, 2))
        self.assertTrue(np.all(np.isfinite(table)))
        self.assertTrue(np.all(table > 0.0))
        with self.assertRaises(ParameterError):
            StableSampler.negative_moment_ratio(1.5, 1.5, [1.0], [1.0], 10, rng)


if __name__ == '__main__':
    unittest.main()
