import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ensemble import WignerLevyMatrix, spectrum
from errors import ParameterError
from experiments.base import BaseExperiment
from experiments.report import PlotData
from limitlaw import FixedPointSolver
from rde import DynamicsConfig, PopulationDynamics
from stable import check_alpha


def _parse_z(re: Any, im: Any) -> complex:
    z = complex(float(re), float(im))
    if not z.imag > 0.0:
        raise ParameterError(f"spectral parameter needs Im z > 0, got {z}", {'re': z.real, 'im': z.imag})
    return z


class FracMomentVanishingExperiment(BaseExperiment):
    """
    (1/n) sum_i (Im R_ii(z))^{alpha/2} at z = E + i n^{-1/6} against n, with the same statistic at a bulk energy and, optionally, the population-dynamics value at the matching point.

    Population values are computed in the unit-tail frame: R_A(z) is compared with s^{-1} R(z / s), s = 2^{1/alpha}.
    """
    name = 'frac-moment'
    required = ('alpha', 'n_list', 'energy', 'trials')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '',
                 dynamics_config: Optional[DynamicsConfig] = None) -> None:
        super().__init__(parameters, seed, workers, version)
        self.alpha: float = check_alpha(self.param('alpha'), upper=2.0 / 3.0)
        self.n_list: List[int] = [int(n) for n in self.param('n_list')]
        self.energy: float = float(self.param('energy'))
        self.bulk_energy: float = float(self.param('bulk_energy', 0.3))
        self.trials: int = int(self.param('trials'))
        self.eta_exponent: float = float(self.param('eta_exponent', 1.0 / 6.0))
        self.compare_rde: bool = bool(self.param('compare_rde', False))
        self.dynamics_config: DynamicsConfig = dynamics_config or DynamicsConfig()
        self.scale: float = 2.0 ** (1.0 / self.alpha)

    def eta_for(self, n: int) -> float:
        return n ** (-self.eta_exponent)

    def run_trials(self) -> List[Dict[str, Any]]:
        power = self.alpha / 2.0

        def trial(task: Tuple[int, int]) -> Dict[str, Any]:
            n, seed = task
            spec = spectrum(WignerLevyMatrix.build(n, self.alpha, seed))
            eta = self.eta_for(n)
            return {'n': n, 'seed': seed, 'eta': eta,
                    'moment': spec.frac_moment_imag(complex(self.energy, eta), power),
                    'bulk_moment': spec.frac_moment_imag(complex(self.bulk_energy, eta), power),
                    'bound': eta ** (-power)}

        tasks = [(n, seed) for index, n in enumerate(self.n_list) for seed in self.trial_seeds(self.trials, stream=index)]
        return self.map_trials(trial, tasks)

    def rde_value(self, n: int) -> Dict[str, float]:
        z = complex(self.energy, self.eta_for(n)) / self.scale
        dynamics = PopulationDynamics(self.alpha, self.dynamics_config)
        run = dynamics.run(z, self.trial_seeds(1, stream=1000)[0])
        values = np.clip(run.pool.samples.imag, 0.0, None) ** (self.alpha / 2.0)
        factor = self.scale ** (-self.alpha / 2.0)
        return {'value': factor * float(np.mean(values)),
                'standard_error': factor * float(np.std(values)) / math.sqrt(values.size),
                'stationarity_ks': run.stationarity_ks}

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        per_n = {}
        for n in self.n_list:
            group = [record for record in records if record['n'] == n]
            moments = np.array([r['moment'] for r in group])
            bulk = np.array([r['bulk_moment'] for r in group])
            per_n[str(n)] = {'eta': self.eta_for(n), 'mean_moment': float(moments.mean()),
                             'standard_error': float(moments.std() / math.sqrt(max(moments.size, 1))),
                             'mean_bulk_moment': float(bulk.mean()),
                             'contrast': float(bulk.mean() / moments.mean()) if moments.mean() > 0.0 else math.inf}
        means = [per_n[str(n)]['mean_moment'] for n in self.n_list]
        last = per_n[str(self.n_list[-1])]
        self.flags['decreasing_in_n'] = bool(all(x > y for x, y in zip(means, means[1:])))
        self.flags['contrast_at_least_two'] = bool(last['contrast'] >= 2.0)
        self.flags['resolvent_bound'] = bool(all(r['moment'] <= r['bound'] * (1.0 + 1e-12) for r in records))
        aggregate: Dict[str, Any] = {'per_n': per_n}
        if self.compare_rde:
            rde = self.rde_value(self.n_list[-1])
            combined = math.hypot(rde['standard_error'], last['standard_error'])
            distance = abs(rde['value'] - last['mean_moment'])
            aggregate['rde'] = {**rde, 'distance': distance, 'combined_error': combined}
            self.flags['matches_rde'] = bool(distance <= 3.0 * combined)
        return aggregate

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        header = ['n', 'eta', 'mean_moment', 'mean_bulk_moment']
        rows = [[int(n)] + [stats[key] for key in header[1:]] for n, stats in aggregate['per_n'].items()]
        return {'moment_vs_eta': (header, rows)}


class FixedPointResidualExperiment(BaseExperiment):
    """
    Finite-n residuals |Y_n - phi(Y_n)| and |X_n - psi(Y_n)| with Y_n = mean (-i R_kk)^{alpha/2} and X_n = mean(-i R_kk), in the unit-tail frame R(z) = s R_A(s z).
    """
    name = 'fixed-point'
    required = ('alpha', 'n_list', 're', 'im', 'trials')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '',
                 solver: Optional[FixedPointSolver] = None) -> None:
        super().__init__(parameters, seed, workers, version)
        self.alpha: float = check_alpha(self.param('alpha'))
        self.n_list: List[int] = [int(n) for n in self.param('n_list')]
        self.z: complex = _parse_z(self.param('re'), self.param('im'))
        self.trials: int = int(self.param('trials'))
        self.solver: FixedPointSolver = solver or FixedPointSolver(self.alpha)
        self.scale: float = 2.0 ** (1.0 / self.alpha)

    def run_trials(self) -> List[Dict[str, Any]]:
        a = self.alpha / 2.0

        def trial(task: Tuple[int, int]) -> Dict[str, Any]:
            n, seed = task
            spec = spectrum(WignerLevyMatrix.build(n, self.alpha, seed))
            h = -1j * self.scale * spec.resolvent_diag(self.scale * self.z)
            y = complex(np.mean(np.exp(a * np.log(h))))
            x = complex(np.mean(h))
            return {'n': n, 'seed': seed, 'y': y, 'x': x,
                    'phi_residual': abs(y - self.solver.phi(self.z, y)),
                    'psi_residual': abs(x - self.solver.psi(self.z, y))}

        tasks = [(n, seed) for index, n in enumerate(self.n_list) for seed in self.trial_seeds(self.trials, stream=index)]
        return self.map_trials(trial, tasks)

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        limit = self.solver.solve(self.z)
        per_n = {}
        for n in self.n_list:
            group = [record for record in records if record['n'] == n]
            per_n[str(n)] = {
                'phi_residual': float(np.mean([r['phi_residual'] for r in group])),
                'psi_residual': float(np.mean([r['psi_residual'] for r in group])),
                'distance_to_limit': float(np.mean([abs(r['y'] - limit.y) for r in group])),
            }
        phi_values = [per_n[str(n)]['phi_residual'] for n in self.n_list]
        psi_values = [per_n[str(n)]['psi_residual'] for n in self.n_list]
        self.flags['phi_residual_decreasing'] = bool(phi_values[-1] < phi_values[0])
        self.flags['psi_residual_decreasing'] = bool(psi_values[-1] < psi_values[0])
        return {'per_n': per_n, 'limit_y': limit.y, 'limit_g': limit.g, 'limit_status': limit.status}

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        header = ['n', 'phi_residual', 'psi_residual', 'distance_to_limit']
        rows = [[int(n)] + [stats[key] for key in header[1:]] for n, stats in aggregate['per_n'].items()]
        return {'residual_vs_n': (header, rows)}
