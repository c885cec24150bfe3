import math
from typing import Any, Dict, List

import numpy as np

from ensemble import WignerLevyMatrix, esy_counting_bound, minor_spectra, spectrum
from errors import ParameterError
from experiments.base import BaseExperiment
from experiments.report import PlotData
from experiments.rho import rho_of_alpha
from stable import check_alpha

QUANTILES = (50, 90, 99)


def eta_cutoff(alpha: float, n: int) -> float:
    """Smallest admissible eta, n^{-(alpha + 2)/4}."""
    return n ** (-(alpha + 2.0) / 4.0)


class WegnerExperiment(BaseExperiment):
    """
    Counting statistic N_I / (n eta^gamma) for I = [E - eta, E + eta] over trials, together with the trace ratio tr R R* / (n eta^{-4/(2+alpha)} (log n)^{(2+alpha)/4}) at z = E + i eta.

    The first `esy_trials` trials also evaluate the geometric bound built from `esy_minors` minors, rescaled by n / esy_minors; the number actually used is recorded as `minors_used`.
    """
    name = 'wegner'
    required = ('alpha', 'n', 'eta_list', 'energy', 'trials')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '') -> None:
        super().__init__(parameters, seed, workers, version)
        self.alpha: float = check_alpha(self.param('alpha'))
        self.n: int = int(self.param('n'))
        self.etas: List[float] = sorted(float(eta) for eta in self.param('eta_list'))
        if not self.etas or self.etas[0] <= 0.0:
            raise ParameterError(f"eta_list must hold positive values, got {self.etas}")
        self.energy: float = float(self.param('energy'))
        self.trials: int = int(self.param('trials'))
        self.esy_trials: int = int(self.param('esy_trials', 0))
        self.esy_minors: int = int(self.param('esy_minors', 20))
        self.gamma_exp: float = rho_of_alpha(self.alpha).gamma_exp
        self.in_regime: List[bool] = []

    def check_regime(self) -> None:
        cutoff = eta_cutoff(self.alpha, self.n)
        self.in_regime = [eta >= cutoff for eta in self.etas]
        for eta, ok in zip(self.etas, self.in_regime):
            if not ok:
                self.mark_out_of_regime(f"eta={eta} below the cutoff n^(-(alpha+2)/4)={cutoff:.4g}", {'eta': eta, 'cutoff': cutoff})

    def _trace_scale(self, eta: float) -> float:
        return self.n * eta ** (-4.0 / (2.0 + self.alpha)) * math.log(self.n) ** ((2.0 + self.alpha) / 4.0)

    def run_trials(self) -> List[Dict[str, Any]]:
        seeds = self.trial_seeds(self.trials)

        def trial(task) -> Dict[str, Any]:
            index, seed = task
            matrix = WignerLevyMatrix.build(self.n, self.alpha, seed)
            spec = spectrum(matrix)
            counts = [spec.interval_count(self.energy - eta, self.energy + eta) for eta in self.etas]
            record: Dict[str, Any] = {
                'seed': seed,
                'counts': counts,
                'ratios': [count / (self.n * eta ** self.gamma_exp) for count, eta in zip(counts, self.etas)],
                'trace_ratios': [spec.trace_resolvent_square(complex(self.energy, eta)) / self._trace_scale(eta) for eta in self.etas],
                'monotone': bool(all(x <= y for x, y in zip(counts, counts[1:]))),
            }
            if index < self.esy_trials:
                picks = np.random.default_rng(seed).choice(self.n, size=min(self.esy_minors, self.n), replace=False)
                minors = minor_spectra(matrix, sorted(int(k) for k in picks))
                bounds = [esy_counting_bound(matrix, minors, self.energy, eta) for eta in self.etas]
                record['esy_bounds'] = [bound.value * self.n / len(minors) for bound in bounds]
                record['minors_used'] = len(minors)
            return record

        return self.map_trials(trial, list(enumerate(seeds)))

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        ratios = np.array([record['ratios'] for record in records])
        traces = np.array([record['trace_ratios'] for record in records])
        rows = []
        for column, eta in enumerate(self.etas):
            quantiles = np.percentile(ratios[:, column], QUANTILES)
            rows.append({'eta': eta, 'in_regime': self.in_regime[column],
                         **{f"q{q}": float(value) for q, value in zip(QUANTILES, quantiles)},
                         'trace_ratio_median': float(np.median(traces[:, column]))})
        upper = [row['q99'] for row in rows if row['in_regime']]
        spread = max(upper) / min(upper) if upper and min(upper) > 0.0 else math.inf
        self.flags['p99_spread'] = spread
        self.flags['bounded_p99'] = bool(spread < 3.0)
        self.flags['counts_monotone'] = bool(all(record['monotone'] for record in records))
        esy = [record for record in records if 'esy_bounds' in record]
        if esy:
            self.flags['esy_estimate_covers_count'] = bool(all(bound >= count for record in esy
                                                                for bound, count in zip(record['esy_bounds'], record['counts'])))
        summary: Dict[str, Any] = {'gamma_exp': self.gamma_exp, 'eta_cutoff': eta_cutoff(self.alpha, self.n), 'per_eta': rows}
        if esy:
            used = min(record['minors_used'] for record in esy)
            # Fewer than n minors: the bound is a rescaled estimate.
            summary['esy_minors_used'] = used
            summary['esy_scaled_subsample'] = bool(used < self.n)
        return summary

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        header = ['eta', 'q50', 'q90', 'q99', 'trace_ratio_median']
        return {'ratio_quantiles': (header, [[row[key] for key in header] for row in aggregate['per_eta']])}
