import csv
import json
import math
import os
import tempfile
import unittest

import numpy as np

from errors import ParameterError
from experiments import (EXPERIMENTS, ConcentrationExperiment, DelocalizationExperiment, ExperimentReport, FixedPointResidualExperiment,
                         FracMomentVanishingExperiment, GaussianProjectionExperiment, LocalizationExperiment, LocalLawExperiment,
                         RdeCrossCheck, RealAxisCheck, VanishingImagExperiment, WegnerExperiment, rho_of_alpha, to_builtin)
from experiments.eigenvectors import eigenvector_weights, log_log_slope, support_threshold
from experiments.gaussian import projected_norms
from experiments.local_law import _check_window, interval_length, tile_window
from experiments.wegner import eta_cutoff
from ensemble import SpectralData
from limitlaw import FixedPointSolver
from rde import DynamicsConfig, GOperatorConfig

SMALL_POOL = dict(pool_size=1000, truncation=30, burn_in=2, generations=4, chunk_size=250)


class TestExponents(unittest.TestCase):

    def test_rho_table(self):
        self.assertEqual(rho_of_alpha(1.8).rho, 0.5)
        self.assertEqual(rho_of_alpha(1.6).rho, 0.5)
        self.assertAlmostEqual(rho_of_alpha(1.5).rho, 3.0 / 7.0, places=15)
        self.assertAlmostEqual(rho_of_alpha(0.5).rho, 1.0 / 7.0, places=15)
        self.assertAlmostEqual(rho_of_alpha(1.0).rho, 0.2, places=15)

    def test_gamma_exponent(self):
        self.assertAlmostEqual(rho_of_alpha(0.5).gamma_exp, 0.4, places=15)
        self.assertAlmostEqual(rho_of_alpha(1.5).gamma_exp, 6.0 / 7.0, places=15)

    def test_rho_rejects_bad_alpha(self):
        with self.assertRaises(ParameterError):
            rho_of_alpha(2.0)

    def test_eta_cutoff(self):
        self.assertAlmostEqual(eta_cutoff(1.0, 16), 0.125, places=15)

    def test_interval_length(self):
        n = 1000
        self.assertAlmostEqual(interval_length(1.8, n, 0.1), 0.1 * n ** -0.5 * math.log(n) ** 2, places=12)


class TestWindows(unittest.TestCase):

    def test_tile_window(self):
        tiles = tile_window((1.0, 2.0), 0.3, 10)
        self.assertEqual(len(tiles), 3)
        self.assertAlmostEqual(tiles[0][0], 1.0)
        self.assertAlmostEqual(tiles[-1][1], 1.9)
        self.assertEqual(len(tile_window((1.0, 2.0), 0.3, 2)), 2)

    def test_check_window(self):
        self.assertEqual(_check_window([1, 2]), (1.0, 2.0))
        for window in ((2.0, 1.0), (-1.0, 1.0), 'ab', None):
            with self.assertRaises(ParameterError):
                _check_window(window)


class TestEigenvectorHelpers(unittest.TestCase):

    def test_support_threshold(self):
        self.assertTrue(math.isinf(support_threshold(0.0, 0.1, 1.0)))
        self.assertAlmostEqual(support_threshold(1.0, 1.0, 1.0), 1.0)
        self.assertAlmostEqual(support_threshold(0.5, 0.1, 1.0), 0.04)

    def test_log_log_slope(self):
        self.assertAlmostEqual(log_log_slope([1.0, 2.0, 4.0], [1.0, 4.0, 16.0]), 2.0)
        self.assertTrue(math.isnan(log_log_slope([1.0], [1.0])))

    def test_eigenvector_weights(self):
        spec = SpectralData.from_symmetric(np.diag([1.0, 2.0, 3.0]))
        weights = eigenvector_weights(spec, 1.5, 3.5)
        self.assertTrue(np.allclose(weights, [0.0, 1.5, 1.5]))
        self.assertAlmostEqual(float(np.mean(weights)), 1.0)
        self.assertIsNone(eigenvector_weights(spec, 5.0, 6.0))


class TestGaussianProjection(unittest.TestCase):

    def test_full_rank_is_plain_gaussian(self):
        norms = projected_norms(5, 5, 2.0, 40, np.random.default_rng(0))
        self.assertEqual(norms.shape, (40,))
        self.assertTrue(np.all(norms > 0.0))

    def test_projection_mean_square(self):
        norms = projected_norms(20, 5, 2.0, 2000, np.random.default_rng(1))
        self.assertAlmostEqual(float(np.mean(norms ** 2)), 5.0, delta=0.4)

    def test_experiment_is_worker_independent(self):
        params = {'n': 10, 'd_list': [10, 2], 'p': 1.0, 'delta': 0.1, 'trials': 64, 'batches': 2}
        first = GaussianProjectionExperiment(params, seed=17, workers=1).run()
        second = GaussianProjectionExperiment(params, seed=17, workers=3).run()
        self.assertEqual(first.to_json(), second.to_json())
        self.assertEqual(len(first.records), 4)
        self.assertIn('frequency_non_increasing', first.flags)
        self.assertEqual(first.aggregate['per_d']['2']['trials'], 64)

    def test_experiment_rejects_bad_parameters(self):
        with self.assertRaises(ParameterError):
            GaussianProjectionExperiment({'n': 10, 'd_list': [20], 'p': 1.0, 'delta': 0.1, 'trials': 4}, seed=1)
        with self.assertRaises(ParameterError):
            GaussianProjectionExperiment({'n': 10, 'd_list': [2], 'p': 3.0, 'delta': 0.1, 'trials': 4}, seed=1)
        with self.assertRaises(ParameterError):
            GaussianProjectionExperiment({'n': 10, 'd_list': [2]}, seed=1)


class TestExperimentRuns(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.solver = FixedPointSolver(1.5)

    def run_with_workers(self, experiment_class, parameters, **extras):
        reports = []
        for workers in (1, 3):
            options = {key: value(workers) if callable(value) else value for key, value in extras.items()}
            reports.append(experiment_class(parameters, seed=11, workers=workers, version='test', **options).run())
        self.assertEqual(reports[0].to_json(), reports[1].to_json())
        self.assertEqual(reports[0].command, experiment_class.name)
        self.assertIn('out_of_regime', reports[0].flags)
        return reports[0]

    @staticmethod
    def pool(workers):
        return DynamicsConfig(workers=workers, **SMALL_POOL)

    @staticmethod
    def operator(workers):
        return GOperatorConfig(n_theta=8, n_y=8, n_r=16, workers=workers)

    def test_local_law(self):
        params = {'alpha': 1.5, 'n_list': [40, 80], 'window': [0.5, 1.5], 'trials': 2, 'c1': 0.1, 'limit_eta': 0.1,
                  'max_intervals': 2}
        report = self.run_with_workers(LocalLawExperiment, params, solver=self.solver)
        self.assertEqual(sorted(report.aggregate['per_n']), ['40', '80'])
        self.assertEqual(len(report.records), 4)
        self.assertFalse(report.flags['out_of_regime'])
        self.assertIn('ratio_decreasing', report.flags)
        self.assertAlmostEqual(report.aggregate['limit_scale'], 2.0 ** (1.0 / 1.5))
        self.assertTrue(report.aggregate['limit_masses'])
        for _, _, mass in report.aggregate['limit_masses']:
            self.assertTrue(0.0 < mass < 1.0)

    def test_concentration(self):
        params = {'alpha': 1.5, 'n': 30, 'interval': [0.5, 1.5], 'trials': 20, 't_list': [0.05, 0.1]}
        report = self.run_with_workers(ConcentrationExperiment, params)
        self.assertEqual(len(report.records), 20)
        self.assertEqual([row['t'] for row in report.aggregate['deviations']], [0.05, 0.1])
        self.assertTrue(0.0 <= report.aggregate['mean_mass'] <= 1.0)
        self.assertIn('concentration_within_bound', report.flags)

    def test_wegner_records_minors_used(self):
        params = {'alpha': 1.5, 'n': 40, 'eta_list': [0.3, 0.6], 'energy': 0.5, 'trials': 4, 'esy_trials': 2, 'esy_minors': 10}
        report = self.run_with_workers(WegnerExperiment, params)
        self.assertEqual([record.get('minors_used') for record in report.records], [10, 10, None, None])
        self.assertEqual(report.aggregate['esy_minors_used'], 10)
        self.assertTrue(report.aggregate['esy_scaled_subsample'])
        self.assertEqual(len(report.aggregate['per_eta']), 2)
        self.assertIn('esy_estimate_covers_count', report.flags)
        self.assertIn('bounded_p99', report.flags)
        full = WegnerExperiment({**params, 'n': 12, 'trials': 2, 'esy_trials': 1, 'esy_minors': 60}, seed=3).run()
        self.assertEqual(full.records[0]['minors_used'], 12)
        self.assertFalse(full.aggregate['esy_scaled_subsample'])
        plain = WegnerExperiment({**params, 'esy_trials': 0}, seed=3).run()
        self.assertNotIn('esy_minors_used', plain.aggregate)

    def test_delocalization(self):
        params = {'alpha': 1.5, 'n_list': [30, 60], 'window': [0.2, 1.0], 'trials': 3}
        report = self.run_with_workers(DelocalizationExperiment, params)
        self.assertEqual(len(report.records), 6)
        self.assertTrue(report.flags['normalized'])
        self.assertTrue(report.flags['dual_bound'])
        self.assertIn('slope', report.aggregate)
        self.assertAlmostEqual(report.aggregate['predicted_exponent'], -rho_of_alpha(1.5).rho * (1.0 - 1.0 / 1.5))

    def test_localization(self):
        params = {'alpha': 0.5, 'n_list': [30, 60], 'energy': 3.0, 'trials': 3}
        report = self.run_with_workers(LocalizationExperiment, params)
        self.assertEqual(len(report.records), 6)
        self.assertTrue(report.flags['w_mean_exact'])
        self.assertTrue(report.flags['mass_outside_within_delta'])
        self.assertEqual(report.aggregate['delta'], 0.1)
        self.assertEqual(report.aggregate['kappa'], 0.125)

    def test_vanishing_imag(self):
        params = {'alpha': 0.5, 're': 2.0, 'im_list': [0.05, 0.1], 'bulk_re': 0.3}
        report = self.run_with_workers(VanishingImagExperiment, params, dynamics_config=self.pool)
        self.assertEqual(len(report.records), 4)
        self.assertEqual(report.aggregate['z'], [[2.0, 0.1], [2.0, 0.05]])
        self.assertEqual(report.aggregate['generations'], 6)
        self.assertEqual(len(report.aggregate['diagnostics']['stationarity_ks']), 2)
        self.assertIn('bulk', report.aggregate)
        self.assertFalse(report.flags['out_of_regime'])
        self.assertTrue(report.flags['within_resolvent_bound'])
        self.assertIn('stationary', report.flags)

    def test_rde_cross_check(self):
        params = {'alpha': 0.8, 're': 1.0, 'im': 1.0, 'n': 40, 'trials': 3, 'angles': 3, 'grid_points': 9}
        report = self.run_with_workers(RdeCrossCheck, params, dynamics_config=self.pool, operator_config=self.operator)
        self.assertEqual(len(report.records), 3)
        self.assertEqual(len(report.aggregate['comparison']), 3)
        self.assertAlmostEqual(report.aggregate['scale'], 2.0 ** 1.25)
        for flag in ('matrix_matches_pool', 'pool_stationary', 'fixed_point_change_below_5pct', 'contraction_below_one'):
            self.assertIn(flag, report.flags)
        self.assertGreater(report.aggregate['contraction']['input_distance'], 0.0)

    def test_real_axis(self):
        params = {'alpha': 0.5, 'energy': 10.0, 'mc_size': 2000, 'angles': 3, 'eta': 0.01}
        report = self.run_with_workers(RealAxisCheck, params, dynamics_config=self.pool)
        self.assertEqual([record['energy'] for record in report.records], [10.0, -10.0])
        self.assertTrue(report.flags['swap_symmetric'])
        self.assertEqual(report.aggregate['swap_distance'], 0.0)
        self.assertGreater(report.aggregate['b'], report.aggregate['a'])
        self.assertEqual(len(report.aggregate['pool_comparison']), 3)
        self.assertIn('ab_matches_pool', report.flags)
        alone = RealAxisCheck({**params, 'compare_pool': False}, seed=11).run()
        self.assertNotIn('pool_comparison', alone.aggregate)
        self.assertEqual(alone.aggregate['a'], report.aggregate['a'])

    def test_frac_moment(self):
        params = {'alpha': 0.5, 'n_list': [30, 60], 'energy': 3.0, 'trials': 3, 'compare_rde': True}
        report = self.run_with_workers(FracMomentVanishingExperiment, params, dynamics_config=self.pool)
        self.assertEqual(len(report.records), 6)
        self.assertTrue(report.flags['resolvent_bound'])
        self.assertIn('matches_rde', report.flags)
        self.assertAlmostEqual(report.aggregate['per_n']['30']['eta'], 30 ** (-1.0 / 6.0))
        self.assertGreaterEqual(report.aggregate['rde']['value'], 0.0)

    def test_fixed_point_residuals(self):
        params = {'alpha': 1.5, 'n_list': [30, 60], 're': 1.0, 'im': 1.0, 'trials': 2}
        report = self.run_with_workers(FixedPointResidualExperiment, params, solver=self.solver)
        self.assertEqual(report.aggregate['limit_status'], 'ok')
        for stats in report.aggregate['per_n'].values():
            self.assertGreaterEqual(stats['phi_residual'], 0.0)
            self.assertGreaterEqual(stats['psi_residual'], 0.0)
        self.assertIn('phi_residual_decreasing', report.flags)


class TestReport(unittest.TestCase):

    def test_to_builtin(self):
        value = to_builtin({'z': 1.0 + 2.0j, 'nan': math.nan, 'inf': -math.inf, 'count': np.int64(3),
                            'flag': np.bool_(True), 'array': np.array([1.5, 2.5]), 'pair': (1, 2)})
        self.assertEqual(value, {'z': [1.0, 2.0], 'nan': 'nan', 'inf': '-inf', 'count': 3, 'flag': True,
                                 'array': [1.5, 2.5], 'pair': [1, 2]})

    def test_json_is_sorted_and_stable(self):
        report = ExperimentReport(command='demo', version='1.0.0', config={'b': 1, 'a': 2}, records=[{'seed': 5}],
                                  aggregate={'x': np.float64(0.5)}, flags={'ok': True}, timings={'total': 1.0})
        text = report.to_json()
        self.assertEqual(text, report.to_json())
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertNotIn('timings', json.loads(text))

    def test_write(self):
        report = ExperimentReport(command='demo', version='1.0.0', config={},
                                  plot_data={'curve': (['E', 'value'], [[0.5, 0.1], [1.0, 0.2]])}, timings={'total': 0.25})
        with tempfile.TemporaryDirectory() as tmp:
            written = report.write(tmp)
            self.assertEqual([os.path.basename(path) for path in written], ['demo.json', 'demo.timings.json', 'demo.curve.csv'])
            with open(os.path.join(tmp, 'demo.curve.csv'), newline='', encoding='utf-8') as file:
                rows = list(csv.reader(file))
            with open(os.path.join(tmp, 'demo.timings.json'), encoding='utf-8') as file:
                timings = json.load(file)
        self.assertEqual(rows[0], ['E', 'value', 'value_hex'])
        self.assertEqual(float.fromhex(rows[1][2]), 0.1)
        self.assertEqual(timings, {'total': 0.25})


class TestRegistry(unittest.TestCase):

    def test_experiment_names(self):
        self.assertEqual(sorted(EXPERIMENTS), sorted(['local-law', 'concentration', 'wegner', 'deloc', 'loc', 'rde', 'rde-check',
                                                      'real-axis', 'frac-moment', 'gauss-proj', 'fixed-point']))
        for name, experiment in EXPERIMENTS.items():
            self.assertEqual(experiment.name, name)


if __name__ == '__main__':
    unittest.main()
