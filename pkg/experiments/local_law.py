import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ensemble import WignerLevyMatrix, eigenvalues
from errors import ConvergenceError, NumericalError, ParameterError
from experiments.base import BaseExperiment
from experiments.report import PlotData
from experiments.rho import rho_of_alpha
from limitlaw import FixedPointSolver, StieltjesCurve, interval_mass_from_stieltjes
from stable import check_alpha


def interval_length(alpha: float, n: int, c1: float) -> float:
    """c1 n^{-rho} (log n)^2."""
    return c1 * n ** (-rho_of_alpha(alpha).rho) * math.log(n) ** 2


def tile_window(window: Tuple[float, float], length: float, limit: int) -> List[Tuple[float, float]]:
    """Consecutive intervals of the given length starting at the left end of the window, at most `limit` of them."""
    lo, hi = window
    count = min(int((hi - lo) // length), int(limit))
    return [(lo + j * length, lo + (j + 1) * length) for j in range(count)]


def _check_window(window: Any) -> Tuple[float, float]:
    try:
        lo, hi = (float(value) for value in window)
    except (TypeError, ValueError):
        raise ParameterError(f"window must be a pair of reals, got {window!r}")
    if not lo < hi:
        raise ParameterError(f"window must satisfy lo < hi, got [{lo}, {hi}]", {'window': [lo, hi]})
    if lo <= 0.0 <= hi:
        raise ParameterError(f"window [{lo}, {hi}] must exclude a neighbourhood of 0", {'window': [lo, hi]})
    return lo, hi


class LocalLawExperiment(BaseExperiment):
    """
    Compares mu_A(I) with the limit mass on intervals of length c1 n^{-rho} (log n)^2 tiling the window K.

    The matrices use the w_alpha entry law, whose spectrum is the limit measure dilated by s = 2^{1/alpha}; limit masses are therefore taken on I / s. The reflected interval -I is measured on the same matrices.
    """
    name = 'local-law'
    required = ('alpha', 'n_list', 'window', 'trials')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '',
                 solver: Optional[FixedPointSolver] = None) -> None:
        super().__init__(parameters, seed, workers, version)
        self.alpha: float = check_alpha(self.param('alpha'))
        self.window: Tuple[float, float] = _check_window(self.param('window'))
        self.n_list: List[int] = [int(n) for n in self.param('n_list')]
        self.trials: int = int(self.param('trials'))
        self.c1: float = float(self.param('c1', 0.1))
        self.limit_eta: float = float(self.param('limit_eta', 2e-3))
        self.max_intervals: int = int(self.param('max_intervals', 8))
        self.solver: FixedPointSolver = solver or FixedPointSolver(self.alpha)
        self.scale: float = 2.0 ** (1.0 / self.alpha)
        self.limit_masses: Dict[Tuple[float, float], float] = {}

    def check_regime(self) -> None:
        for n in self.n_list:
            length = interval_length(self.alpha, n, self.c1)
            if length > self.window[1] - self.window[0]:
                self.mark_out_of_regime(f"interval length {length:.4g} at n={n} exceeds the window {self.window}",
                                        {'n': n, 'length': length})

    def _limit_mass(self, curve: StieltjesCurve, interval: Tuple[float, float]) -> Optional[float]:
        if interval in self.limit_masses:
            return self.limit_masses[interval]
        a, b = interval[0] / self.scale, interval[1] / self.scale
        try:
            mass = interval_mass_from_stieltjes(self.solver, a, b, self.limit_eta, curve=curve).mass
        except (ConvergenceError, NumericalError) as ex:
            self.logger.warning(f"Interval {interval} skipped: {ex}")
            self.flags.setdefault('skipped_intervals', []).append(list(interval))
            mass = None
        self.limit_masses[interval] = mass
        return mass

    def intervals_for(self, n: int) -> List[Tuple[float, float]]:
        length = min(interval_length(self.alpha, n, self.c1), self.window[1] - self.window[0])
        return tile_window(self.window, length, self.max_intervals)

    def run_trials(self) -> List[Dict[str, Any]]:
        curve = StieltjesCurve(self.solver, self.limit_eta)
        plan = {}
        for n in self.n_list:
            usable = []
            for interval in self.intervals_for(n):
                mass = self._limit_mass(curve, interval)
                if mass is not None:
                    usable.append((interval, mass))
            plan[n] = usable
            self.logger.info(f"local-law n={n}: {len(usable)} intervals of length {interval_length(self.alpha, n, self.c1):.4g}")

        def trial(task: Tuple[int, int]) -> Dict[str, Any]:
            n, seed = task
            values = eigenvalues(WignerLevyMatrix.build(n, self.alpha, seed))
            ratios, reflected = [], []
            for (a, b), mass in plan[n]:
                length = b - a
                count = np.searchsorted(values, b, side='right') - np.searchsorted(values, a, side='left')
                mirror = np.searchsorted(values, -a, side='right') - np.searchsorted(values, -b, side='left')
                ratios.append(abs(count / n - mass) / length)
                reflected.append(abs(mirror / n - mass) / length)
            return {'n': n, 'seed': seed, 'ratios': ratios, 'reflected_ratios': reflected}

        tasks = [(n, seed) for index, n in enumerate(self.n_list) for seed in self.trial_seeds(self.trials, stream=index)]
        return self.map_trials(trial, tasks)

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        per_n = {}
        for n in self.n_list:
            ratios = [r for record in records if record['n'] == n for r in record['ratios']]
            reflected = [r for record in records if record['n'] == n for r in record['reflected_ratios']]
            per_n[str(n)] = {
                'median_ratio': float(np.median(ratios)) if ratios else math.nan,
                'mean_ratio': float(np.mean(ratios)) if ratios else math.nan,
                'median_reflected_ratio': float(np.median(reflected)) if reflected else math.nan,
                'interval_length': interval_length(self.alpha, n, self.c1),
                'intervals': len(self.intervals_for(n)),
            }
        first, last = per_n[str(self.n_list[0])], per_n[str(self.n_list[-1])]
        self.flags['ratio_decreasing'] = bool(last['median_ratio'] < first['median_ratio'])
        return {'per_n': per_n, 'rho': rho_of_alpha(self.alpha).rho, 'limit_scale': self.scale,
                'limit_masses': [[a, b, mass] for (a, b), mass in sorted(self.limit_masses.items())]}

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        rows = [[int(n), stats['median_ratio'], stats['median_reflected_ratio']] for n, stats in aggregate['per_n'].items()]
        return {'ratio_vs_n': (['n', 'median_ratio', 'median_reflected_ratio'], rows)}


class ConcentrationExperiment(BaseExperiment):
    """
    Deviation frequencies of mu_A(I) around its mean over seeds, against 2 exp(-n t^2 / 2) and the total-variation form 2 exp(-n t^2 / (2 ||1_I||_TV^2)) with ||1_I||_TV = 2.
    """
    name = 'concentration'
    required = ('alpha', 'n', 'interval', 'trials')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '') -> None:
        super().__init__(parameters, seed, workers, version)
        self.alpha: float = check_alpha(self.param('alpha'))
        self.n: int = int(self.param('n'))
        self.interval: Tuple[float, float] = tuple(float(v) for v in self.param('interval'))
        if not self.interval[0] < self.interval[1]:
            raise ParameterError(f"interval must satisfy a < b, got {self.interval}")
        self.t_list: List[float] = [float(t) for t in self.param('t_list', [0.01, 0.02])]
        self.trials: int = int(self.param('trials'))

    def run_trials(self) -> List[Dict[str, Any]]:
        a, b = self.interval

        def trial(seed: int) -> Dict[str, Any]:
            values = eigenvalues(WignerLevyMatrix.build(self.n, self.alpha, seed))
            count = np.searchsorted(values, b, side='right') - np.searchsorted(values, a, side='left')
            return {'seed': seed, 'mass': float(count) / self.n}

        return self.map_trials(trial, self.trial_seeds(self.trials))

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        masses = np.array([record['mass'] for record in records])
        center = float(np.mean(masses))
        rows = []
        within = True
        for t in self.t_list:
            frequency = float(np.mean(np.abs(masses - center) >= t))
            bound = 2.0 * math.exp(-self.n * t ** 2 / 2.0)
            tv_bound = 2.0 * math.exp(-self.n * t ** 2 / 8.0)
            within = within and frequency <= 2.0 * bound
            rows.append({'t': t, 'frequency': frequency, 'bound': bound, 'tv_bound': tv_bound})
        self.flags['concentration_within_bound'] = bool(within)
        return {'mean_mass': center, 'std_mass': float(np.std(masses)), 'deviations': rows}

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        rows = [[row['t'], row['frequency'], row['bound'], row['tv_bound']] for row in aggregate['deviations']]
        return {'deviation_frequency': (['t', 'frequency', 'bound', 'tv_bound'], rows)}
