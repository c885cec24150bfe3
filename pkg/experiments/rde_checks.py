import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn

from ensemble import WignerLevyMatrix, spectrum
from errors import ParameterError
from experiments.base import BaseExperiment
from experiments.frac_moment import _parse_z
from experiments.report import PlotData
from limitlaw.cone import bilinear
from rde import (DynamicsConfig, GammaGrid, GOperatorConfig, PopulationDynamics, RealAxisSolution, apply_G_operator,
                 measure_contraction, real_axis_law_samples, solve_real_axis_ab, vanishing_imag_diagnostic)
from rde.population import frac_moment_terms
from stable import check_alpha


def _angles(count: int) -> np.ndarray:
    return np.linspace(0.0, math.pi / 2.0, int(count))


def _moment_stats(samples: np.ndarray, u: complex, kappa: float) -> Tuple[complex, float]:
    terms = frac_moment_terms(samples, u, kappa)
    prefactor = gamma_fn(1.0 - kappa)
    spread = math.sqrt(float(np.var(terms.real) + np.var(terms.imag)) / terms.size)
    return complex(prefactor * np.mean(terms)), prefactor * spread


class VanishingImagExperiment(BaseExperiment):
    """
    Population-dynamics table of E (Im R_0(E + i eta))^{alpha/2} over a decreasing eta list, with its log-log slope, optionally repeated at a bulk energy.
    """
    name = 'rde'
    required = ('alpha', 're', 'im_list')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '',
                 dynamics_config: Optional[DynamicsConfig] = None) -> None:
        super().__init__(parameters, seed, workers, version)
        self.alpha: float = check_alpha(self.param('alpha'))
        self.energy: float = float(self.param('re'))
        self.etas: List[float] = sorted((float(eta) for eta in self.param('im_list')), reverse=True)
        if not self.etas or self.etas[-1] <= 0.0:
            raise ParameterError(f"im_list must hold positive values, got {self.etas}")
        bulk = self.param('bulk_re')
        self.bulk_energy: Optional[float] = None if bulk is None else float(bulk)
        self.dynamics: PopulationDynamics = PopulationDynamics(self.alpha, dynamics_config or DynamicsConfig())

    def check_regime(self) -> None:
        if self.alpha >= 2.0 / 3.0:
            self.mark_out_of_regime(f"vanishing of Im R_0 is only predicted for alpha < 2/3, got {self.alpha}", {'alpha': self.alpha})

    def _table(self, energy: float, seed: int) -> List[Dict[str, Any]]:
        table = vanishing_imag_diagnostic(self.dynamics, energy, self.etas, seed)
        return [{'energy': energy, 'eta': eta, 'seed': seed + index, 'mean_im_frac': im_value, 'mean_abs_frac': abs_value,
                 'stationarity_ks': ks, 'slope': table.slope}
                for index, (eta, im_value, abs_value, ks) in enumerate(zip(table.etas, table.mean_im_frac, table.mean_abs_frac,
                                                                           table.diagnostics['stationarity_ks']))]

    def run_trials(self) -> List[Dict[str, Any]]:
        energies = [self.energy] + ([] if self.bulk_energy is None else [self.bulk_energy])
        seeds = self.trial_seeds(len(energies))
        return [record for energy, seed in zip(energies, seeds) for record in self._table(energy, seed)]

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        main = [record for record in records if record['energy'] == self.energy]
        slope = main[0]['slope']
        bound = gamma_fn(1.0 - self.alpha / 2.0)
        self.flags['slope_positive'] = bool(slope > 0.0)
        self.flags['within_resolvent_bound'] = bool(all(0.0 <= r['mean_im_frac'] <= r['eta'] ** (-self.alpha / 2.0) * bound for r in main))
        self.flags['stationary'] = bool(all(r['stationarity_ks'] <= 2.0 * 1.95 * math.sqrt(2.0 / self.dynamics.config.pool_size)
                                            for r in records))
        aggregate: Dict[str, Any] = {
            'z': [[self.energy, eta] for eta in self.etas],
            'mean_abs_frac': [r['mean_abs_frac'] for r in main],
            'mean_im_frac': [r['mean_im_frac'] for r in main],
            'slope': slope,
            'generations': self.dynamics.config.burn_in + self.dynamics.config.generations,
            'diagnostics': {'stationarity_ks': [r['stationarity_ks'] for r in main], 'tail_mean': self.dynamics.tail_mean},
        }
        if self.bulk_energy is not None:
            bulk = [record for record in records if record['energy'] == self.bulk_energy]
            aggregate['bulk'] = {'energy': self.bulk_energy, 'mean_im_frac': [r['mean_im_frac'] for r in bulk], 'slope': bulk[0]['slope']}
            self.flags['bulk_contrast'] = bool(main[-1]['mean_im_frac'] < 0.1 * bulk[-1]['mean_im_frac'])
        return aggregate

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        header = ['energy', 'eta', 'mean_im_frac', 'mean_abs_frac']
        return {'moment_vs_eta': (header, [[r[key] for key in header] for r in records])}


class RdeCrossCheck(BaseExperiment):
    """
    Cross-validation of the population dynamics against finite-n matrices and against the discrete G_z operator.

    The matrix statistic gamma^n_z(u) = Gamma(1 - kappa) mean ((-i R_kk) . u)^kappa is compared with s^{-kappa} gamma(u) of a pool run at z / s, s = 2^{1/alpha}. The pool grid at kappa = alpha/2 is then pushed once through G_{z/s}, and a contraction factor of G is measured at a larger |z| on two nearby grids.
    """
    name = 'rde-check'
    required = ('alpha', 're', 'im', 'n', 'trials')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '',
                 dynamics_config: Optional[DynamicsConfig] = None, operator_config: Optional[GOperatorConfig] = None) -> None:
        super().__init__(parameters, seed, workers, version)
        self.alpha: float = check_alpha(self.param('alpha'), upper=1.0)
        self.z: complex = _parse_z(self.param('re'), self.param('im'))
        self.n: int = int(self.param('n'))
        self.trials: int = int(self.param('trials'))
        self.kappa: float = float(self.param('kappa', self.alpha / 2.0))
        if not 0.0 < self.kappa < 1.0:
            raise ParameterError(f"kappa must lie in (0, 1), got {self.kappa}", {'kappa': self.kappa})
        self.angle_count: int = int(self.param('angles', 5))
        self.grid_points: int = int(self.param('grid_points', 17))
        self.contraction_z: complex = _parse_z(self.param('contraction_re', 20.0), self.param('contraction_im', 0.5))
        self.beta: float = float(self.param('beta', 0.5))
        self.eps: float = float(self.param('eps', 0.1))
        self.perturbation: float = float(self.param('perturbation', 0.05))
        self.dynamics_config: DynamicsConfig = dynamics_config or DynamicsConfig()
        self.operator_config: GOperatorConfig = operator_config or GOperatorConfig()
        self.scale: float = 2.0 ** (1.0 / self.alpha)

    def run_trials(self) -> List[Dict[str, Any]]:
        units = [complex(math.cos(t), math.sin(t)) for t in _angles(self.angle_count)]
        prefactor = gamma_fn(1.0 - self.kappa)

        def trial(seed: int) -> Dict[str, Any]:
            h = -1j * spectrum(WignerLevyMatrix.build(self.n, self.alpha, seed)).resolvent_diag(self.z)
            return {'seed': seed, 'gamma_n': [complex(prefactor * np.mean(bilinear(h, u) ** self.kappa)) for u in units]}

        return self.map_trials(trial, self.trial_seeds(self.trials))

    def _matrix_comparison(self, records: List[Dict[str, Any]], pool_samples: np.ndarray) -> List[Dict[str, Any]]:
        values = np.array([record['gamma_n'] for record in records])
        factor = self.scale ** (-self.kappa)
        rows = []
        for column, angle in enumerate(_angles(self.angle_count)):
            matrix_mean = complex(np.mean(values[:, column]))
            spread = values[:, column]
            matrix_error = math.sqrt(float(np.var(spread.real) + np.var(spread.imag)) / max(len(records) - 1, 1))
            pool_value, pool_error = _moment_stats(pool_samples, complex(math.cos(angle), math.sin(angle)), self.kappa)
            combined = math.hypot(matrix_error, factor * pool_error)
            distance = abs(matrix_mean - factor * pool_value)
            rows.append({'angle': float(angle), 'matrix': matrix_mean, 'pool': factor * pool_value, 'distance': distance,
                         'combined_error': combined, 'within_three_se': bool(distance <= 3.0 * combined)})
        return rows

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        dynamics = PopulationDynamics(self.alpha, self.dynamics_config)
        unit_z = self.z / self.scale
        run = dynamics.run(unit_z, self.trial_seeds(1, stream=1)[0])
        comparison = self._matrix_comparison(records, run.pool.samples)
        self.flags['matrix_matches_pool'] = bool(all(row['within_three_se'] for row in comparison))
        self.flags['pool_stationary'] = run.stationary

        grid = GammaGrid.from_pool(run.pool, self.grid_points)
        image = apply_G_operator(grid, unit_z, self.operator_config)
        relative_change = image.minus(grid).sup_norm() / grid.sup_norm()
        self.flags['fixed_point_change_below_5pct'] = bool(relative_change < 0.05)
        self.flags['operator_flagged_points'] = int(np.sum(image.flags))

        bumped = GammaGrid(grid.angles, grid.values * (1.0 + self.perturbation * np.cos(2.0 * grid.angles)), self.alpha)
        contraction = measure_contraction(grid, bumped, self.contraction_z, self.beta, self.eps, self.operator_config)
        self.flags['contraction_below_one'] = bool(contraction.factor < 1.0)
        self.logger.info(f"rde-check: G_z relative change {relative_change:.4f}, contraction factor {contraction.factor:.4f}")
        return {
            'unit_z': unit_z,
            'scale': self.scale,
            'comparison': comparison,
            'stationarity_ks': run.stationarity_ks,
            'grid_angles': grid.angles,
            'grid_values': grid.values,
            'operator_values': image.values,
            'relative_change': relative_change,
            'contraction': {'z': contraction.z, 'factor': contraction.factor, 'input_distance': contraction.input_distance,
                            'output_distance': contraction.output_distance, 'flagged_points': contraction.flagged_points},
        }

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        rows = [[row['angle'], row['matrix'].real, row['matrix'].imag, row['pool'].real, row['pool'].imag, row['combined_error']]
                for row in aggregate['comparison']]
        grid_rows = [[float(t), complex(g).real, complex(g).imag, complex(v).real, complex(v).imag]
                     for t, g, v in zip(aggregate['grid_angles'], aggregate['grid_values'], aggregate['operator_values'])]
        return {'gamma_vs_angle': (['angle', 'matrix_re', 'matrix_im', 'pool_re', 'pool_im', 'combined_error'], rows),
                'operator_grid': (['angle', 'gamma_re', 'gamma_im', 'image_re', 'image_im'], grid_rows)}


class RealAxisCheck(BaseExperiment):
    """
    Real-axis (a, b) system at E and -E, with the law -(E + a^{2/alpha} S - b^{2/alpha} S')^{-1} compared against a pool at E + i eta.
    """
    name = 'real-axis'
    required = ('alpha', 'energy', 'mc_size')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '',
                 dynamics_config: Optional[DynamicsConfig] = None) -> None:
        super().__init__(parameters, seed, workers, version)
        self.alpha: float = check_alpha(self.param('alpha'), upper=2.0 / 3.0)
        self.energy: float = float(self.param('energy'))
        self.mc_size: int = int(self.param('mc_size'))
        self.eta: float = float(self.param('eta', 1e-3))
        self.angle_count: int = int(self.param('angles', 5))
        self.compare_pool: bool = bool(self.param('compare_pool', True))
        self.dynamics_config: DynamicsConfig = dynamics_config or DynamicsConfig()
        self.solution: Optional[RealAxisSolution] = None

    def run_trials(self) -> List[Dict[str, Any]]:
        seed = self.trial_seeds(1)[0]
        records = []
        for energy in (self.energy, -self.energy):
            solution = solve_real_axis_ab(self.alpha, energy, self.mc_size, seed)
            if energy == self.energy:
                self.solution = solution
            records.append({'seed': seed, 'energy': energy, 'a': solution.a, 'b': solution.b, 'residuals': solution.residuals,
                            'standard_errors': solution.standard_errors, 'iterations': solution.iterations,
                            'within_error': solution.within_error})
        return records

    def _pool_comparison(self, solution: RealAxisSolution) -> Dict[str, Any]:
        law_seed, pool_seed = self.trial_seeds(2, stream=1)
        law = real_axis_law_samples(solution, self.mc_size, np.random.default_rng(law_seed))
        run = PopulationDynamics(self.alpha, self.dynamics_config).run(complex(self.energy, self.eta), pool_seed)
        samples = run.pool.samples
        rows = []
        for angle in _angles(self.angle_count):
            u = complex(math.cos(angle), math.sin(angle))
            law_value, law_error = _moment_stats(law, u, self.alpha / 2.0)
            pool_value, pool_error = _moment_stats(samples, u, self.alpha / 2.0)
            combined = math.hypot(law_error, pool_error)
            rows.append({'angle': float(angle), 'law': law_value, 'pool': pool_value, 'distance': abs(law_value - pool_value),
                         'combined_error': combined, 'within_three_se': bool(abs(law_value - pool_value) <= 3.0 * combined)})
        power = self.alpha / 2.0
        a_terms = np.clip(samples.real, 0.0, None) ** power
        b_terms = np.clip(-samples.real, 0.0, None) ** power
        root = math.sqrt(samples.size)
        ab = {'a_pool': float(a_terms.mean()), 'a_pool_error': float(a_terms.std()) / root,
              'b_pool': float(b_terms.mean()), 'b_pool_error': float(b_terms.std()) / root}
        return {'rows': rows, 'ab': ab, 'stationarity_ks': run.stationarity_ks}

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        positive, negative = records
        swapped = max(abs(positive['a'] - negative['b']), abs(positive['b'] - negative['a']))
        self.flags['within_error'] = bool(positive['within_error'] and negative['within_error'])
        self.flags['swap_symmetric'] = bool(swapped <= 1e-9 * max(positive['a'], positive['b'], 1e-300))
        aggregate: Dict[str, Any] = {'a': positive['a'], 'b': positive['b'], 'swap_distance': swapped}
        if self.compare_pool:
            comparison = self._pool_comparison(self.solution)
            ab = comparison['ab']
            self.flags['pool_consistent'] = bool(all(row['within_three_se'] for row in comparison['rows']))
            a_error = math.hypot(ab['a_pool_error'], positive['standard_errors'][0])
            b_error = math.hypot(ab['b_pool_error'], positive['standard_errors'][1])
            self.flags['ab_matches_pool'] = bool(abs(ab['a_pool'] - positive['a']) <= 3.0 * a_error
                                                 and abs(ab['b_pool'] - positive['b']) <= 3.0 * b_error)
            aggregate.update({'pool_comparison': comparison['rows'], **ab, 'stationarity_ks': comparison['stationarity_ks']})
        return aggregate

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        if 'pool_comparison' not in aggregate:
            return {}
        rows = [[row['angle'], row['law'].real, row['law'].imag, row['pool'].real, row['pool'].imag, row['combined_error']]
                for row in aggregate['pool_comparison']]
        return {'gamma_real_axis': (['angle', 'law_re', 'law_im', 'pool_re', 'pool_im', 'combined_error'], rows)}
