import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ensemble import SpectralData, WignerLevyMatrix, spectrum
from errors import ParameterError
from experiments.base import BaseExperiment
from experiments.local_law import _check_window
from experiments.report import PlotData
from experiments.rho import rho_of_alpha
from stable import check_alpha


def log_log_slope(xs: List[float], ys: List[float]) -> float:
    pairs = [(x, y) for x, y in zip(xs, ys) if x > 0.0 and y > 0.0 and math.isfinite(y)]
    if len(pairs) < 2:
        return math.nan
    return float(np.polyfit(np.log([p[0] for p in pairs]), np.log([p[1] for p in pairs]), 1)[0])


class DelocalizationExperiment(BaseExperiment):
    """
    Sup-norm M(n) = max ||v_k||_inf over eigenvalues in the window, with ||v||_1 and ||v||_4 of the same vectors.
    """
    name = 'deloc'
    required = ('alpha', 'n_list', 'window', 'trials')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '') -> None:
        super().__init__(parameters, seed, workers, version)
        self.alpha: float = check_alpha(self.param('alpha'))
        if self.alpha <= 1.0:
            raise ParameterError(f"delocalization needs alpha in (1, 2), got {self.alpha}", {'alpha': self.alpha})
        self.window: Tuple[float, float] = _check_window(self.param('window'))
        self.n_list: List[int] = [int(n) for n in self.param('n_list')]
        self.trials: int = int(self.param('trials'))

    def predicted_exponent(self) -> float:
        return -rho_of_alpha(self.alpha).rho * (1.0 - 1.0 / self.alpha)

    def run_trials(self) -> List[Dict[str, Any]]:
        def trial(task: Tuple[int, int]) -> Dict[str, Any]:
            n, seed = task
            spec = spectrum(WignerLevyMatrix.build(n, self.alpha, seed))
            indices = spec.window_indices(*self.window)
            if indices.size == 0:
                self.logger.debug(f"deloc n={n} seed={seed}: no eigenvalue in {self.window}")
                return {'n': n, 'seed': seed, 'skipped': True}
            vectors = spec.eigenvectors[:, indices]
            sup = np.max(np.abs(vectors), axis=0)
            l1 = np.sum(np.abs(vectors), axis=0)
            l2 = np.sqrt(np.sum(vectors ** 2, axis=0))
            l4 = np.sum(vectors ** 4, axis=0) ** 0.25
            return {'n': n, 'seed': seed, 'skipped': False, 'eigen_count': int(indices.size),
                    'sup_norm': float(sup.max()), 'l1_min': float(l1.min()), 'l1_mean': float(l1.mean()),
                    'l4_mean': float(l4.mean()), 'l2_deviation': float(np.max(np.abs(l2 - 1.0))),
                    'dual_bound': bool(np.all(l1 >= l2 ** 2 / sup * (1.0 - 1e-12)))}

        tasks = [(n, seed) for index, n in enumerate(self.n_list) for seed in self.trial_seeds(self.trials, stream=index)]
        return self.map_trials(trial, tasks)

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        kept = [record for record in records if not record['skipped']]
        per_n = {}
        for n in self.n_list:
            group = [record for record in kept if record['n'] == n]
            per_n[str(n)] = {
                'mean_sup_norm': float(np.mean([r['sup_norm'] for r in group])) if group else math.nan,
                'mean_l1': float(np.mean([r['l1_mean'] for r in group])) if group else math.nan,
                'mean_l4': float(np.mean([r['l4_mean'] for r in group])) if group else math.nan,
                'trials': len(group),
            }
        sup_means = [per_n[str(n)]['mean_sup_norm'] for n in self.n_list]
        l1_means = [per_n[str(n)]['mean_l1'] for n in self.n_list]
        slope = log_log_slope([float(n) for n in self.n_list], sup_means)
        predicted = self.predicted_exponent()
        self.logger.info(f"deloc slope {slope:.4f}, predicted exponent {predicted:.4f}")
        self.flags['skipped_trials'] = len(records) - len(kept)
        self.flags['slope_negative'] = bool(slope <= -0.05)
        self.flags['normalized'] = bool(all(r['l2_deviation'] <= 1e-10 for r in kept))
        self.flags['dual_bound'] = bool(all(r['dual_bound'] for r in kept))
        self.flags['l1_increasing'] = bool(all(x < y for x, y in zip(l1_means, l1_means[1:])))
        return {'per_n': per_n, 'slope': slope, 'predicted_exponent': predicted}

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        rows = [[int(n), stats['mean_sup_norm'], stats['mean_l1'], stats['mean_l4']] for n, stats in aggregate['per_n'].items()]
        return {'supnorm_vs_n': (['n', 'mean_sup_norm', 'mean_l1', 'mean_l4'], rows)}


def eigenvector_weights(spec: SpectralData, a: float, b: float) -> Optional[np.ndarray]:
    """W_I(i) = (n / |Lambda_I|) sum_{lambda_k in I} v_k(i)^2, or None when I holds no eigenvalue."""
    indices = spec.window_indices(a, b)
    if indices.size == 0:
        return None
    return spec.n / indices.size * np.sum(spec.eigenvectors[:, indices] ** 2, axis=1)


def support_threshold(moment: float, delta: float, alpha: float) -> float:
    """
    Level t = (moment / delta)^{-1/(1 - alpha/2)}: coordinates with W_I(i) < t carry at most a proportion delta of the mass, since (1/n) sum_{W < t} W <= t^{1 - alpha/2} moment.
    """
    if moment <= 0.0:
        return math.inf
    return (moment / delta) ** (-1.0 / (1.0 - alpha / 2.0))


class LocalizationExperiment(BaseExperiment):
    """
    Fractional moment (1/n) sum_i W_I(i)^{alpha/2} on an interval centred at a large energy, the support J carrying all but a proportion delta of the mass, and the same moment on an interval centred in the bulk.
    """
    name = 'loc'
    required = ('alpha', 'n_list', 'energy', 'trials')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '') -> None:
        super().__init__(parameters, seed, workers, version)
        self.alpha: float = check_alpha(self.param('alpha'), upper=2.0 / 3.0)
        self.n_list: List[int] = [int(n) for n in self.param('n_list')]
        self.energy: float = float(self.param('energy'))
        self.bulk_energy: float = float(self.param('bulk_energy', 0.3))
        self.trials: int = int(self.param('trials'))
        self.delta: float = float(self.param('delta', 0.1))
        self.kappa: float = float(self.param('kappa', self.alpha / 4.0))
        if not 0.0 < self.kappa < self.alpha / 2.0:
            raise ParameterError(f"kappa must lie in (0, alpha/2), got {self.kappa}", {'kappa': self.kappa})
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}", {'delta': self.delta})
        self.fixed_length: Optional[float] = self.param('interval_length')

    def minimal_length(self, n: int) -> float:
        return n ** (-rho_of_alpha(self.alpha).rho) * math.log(n) ** 2

    def length_for(self, n: int) -> float:
        return float(self.fixed_length) if self.fixed_length is not None else self.minimal_length(n)

    def check_regime(self) -> None:
        for n in self.n_list:
            if self.length_for(n) < self.minimal_length(n):
                self.mark_out_of_regime(f"|I|={self.length_for(n):.4g} below n^-rho (log n)^2={self.minimal_length(n):.4g} at n={n}",
                                        {'n': n})

    def _window_stats(self, spec: SpectralData, center: float, length: float) -> Optional[Dict[str, Any]]:
        weights = eigenvector_weights(spec, center - length / 2.0, center + length / 2.0)
        if weights is None:
            return None
        power = self.alpha / 2.0
        moment = float(np.mean(weights ** power))
        threshold = support_threshold(moment, self.delta, self.alpha)
        inside = weights >= threshold
        return {'moment': moment, 'w_mean': float(np.mean(weights)), 'support_fraction': float(np.mean(inside)),
                'mass_outside': float(np.sum(weights[~inside]) / spec.n), 'moment_over_length': moment / length ** self.kappa}

    def run_trials(self) -> List[Dict[str, Any]]:
        def trial(task: Tuple[int, int]) -> Dict[str, Any]:
            n, seed = task
            spec = spectrum(WignerLevyMatrix.build(n, self.alpha, seed))
            length = self.length_for(n)
            edge = self._window_stats(spec, self.energy, length)
            bulk = self._window_stats(spec, self.bulk_energy, length)
            record: Dict[str, Any] = {'n': n, 'seed': seed, 'interval_length': length, 'skipped': edge is None}
            if edge is not None:
                record.update(edge)
            if bulk is not None:
                record['bulk_moment'] = bulk['moment']
            return record

        tasks = [(n, seed) for index, n in enumerate(self.n_list) for seed in self.trial_seeds(self.trials, stream=index)]
        return self.map_trials(trial, tasks)

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        kept = [record for record in records if not record['skipped']]
        per_n = {}
        for n in self.n_list:
            group = [record for record in kept if record['n'] == n]
            moments = [r['moment'] for r in group]
            bulk = [r['bulk_moment'] for r in group if 'bulk_moment' in r]
            mean_moment = float(np.mean(moments)) if moments else math.nan
            mean_bulk = float(np.mean(bulk)) if bulk else math.nan
            per_n[str(n)] = {
                'mean_moment': mean_moment,
                'mean_bulk_moment': mean_bulk,
                'contrast': mean_bulk / mean_moment if moments and mean_moment > 0.0 else math.nan,
                'mean_support_fraction': float(np.mean([r['support_fraction'] for r in group])) if group else math.nan,
                'trials': len(group),
            }
        fractions = [per_n[str(n)]['mean_support_fraction'] for n in self.n_list]
        self.flags['skipped_trials'] = len(records) - len(kept)
        self.flags['w_mean_exact'] = bool(all(abs(r['w_mean'] - 1.0) <= 1e-10 for r in kept))
        self.flags['mass_outside_within_delta'] = bool(all(r['mass_outside'] <= self.delta + 1e-12 for r in kept))
        self.flags['contrast_at_least_two'] = bool(per_n[str(self.n_list[-1])]['contrast'] >= 2.0)
        self.flags['support_fraction_decreasing'] = bool(all(x > y for x, y in zip(fractions, fractions[1:])))
        return {'per_n': per_n, 'delta': self.delta, 'kappa': self.kappa}

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        header = ['n', 'mean_moment', 'mean_bulk_moment', 'mean_support_fraction']
        rows = [[int(n)] + [stats[key] for key in header[1:]] for n, stats in aggregate['per_n'].items()]
        return {'moment_vs_n': (header, rows)}
