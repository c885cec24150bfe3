from typing import Any, Dict, List, Tuple

import numpy as np

from errors import ParameterError
from experiments.base import BaseExperiment
from experiments.report import PlotData

BATCH = 32


def projected_norms(n: int, d: int, p: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """||P G||_p for `count` independent pairs of a uniform rank-d projection P and a standard Gaussian vector G."""
    norms = np.empty(count)
    for start in range(0, count, BATCH):
        size = min(BATCH, count - start)
        if d == n:
            projected = rng.standard_normal((size, n))
        else:
            basis, _ = np.linalg.qr(rng.standard_normal((size, n, d)))
            gauss = rng.standard_normal((size, n))
            projected = np.einsum('bij,bj->bi', basis, np.einsum('bij,bi->bj', basis, gauss))
        norms[start:start + size] = np.sum(np.abs(projected) ** p, axis=1) ** (1.0 / p)
    return norms


class GaussianProjectionExperiment(BaseExperiment):
    """
    Failure frequency of ||P G||_p >= delta (tr P^p)^{1/p} = delta d^{1/p} over random rank-d projections. Trials are split in batches, one seed and one record per (d, batch).
    """
    name = 'gauss-proj'
    required = ('n', 'd_list', 'p', 'delta', 'trials')

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '') -> None:
        super().__init__(parameters, seed, workers, version)
        self.n: int = int(self.param('n'))
        self.d_list: List[int] = sorted(int(d) for d in self.param('d_list'))
        self.p: float = float(self.param('p'))
        self.delta: float = float(self.param('delta'))
        self.trials: int = int(self.param('trials'))
        self.batches: int = max(1, min(int(self.param('batches', 10)), self.trials))
        if not 0.0 < self.p <= 2.0:
            raise ParameterError(f"p must lie in (0, 2], got {self.p}", {'p': self.p})
        if any(not 1 <= d <= self.n for d in self.d_list):
            raise ParameterError(f"every d must satisfy 1 <= d <= n={self.n}, got {self.d_list}", {'d_list': self.d_list})

    def run_trials(self) -> List[Dict[str, Any]]:
        sizes = [self.trials // self.batches + (1 if b < self.trials % self.batches else 0) for b in range(self.batches)]

        def batch(task: Tuple[int, int, int]) -> Dict[str, Any]:
            d, seed, size = task
            norms = projected_norms(self.n, d, self.p, size, np.random.default_rng(seed))
            level = self.delta * d ** (1.0 / self.p)
            return {'d': d, 'seed': seed, 'trials': size, 'failures': int(np.sum(norms < level)),
                    'median_ratio': float(np.median(norms) / d ** (1.0 / self.p))}

        tasks = [(d, seed, size) for index, d in enumerate(self.d_list)
                 for seed, size in zip(self.trial_seeds(self.batches, stream=index), sizes)]
        return self.map_trials(batch, tasks)

    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        per_d = {}
        for d in self.d_list:
            group = [record for record in records if record['d'] == d]
            failures = sum(record['failures'] for record in group)
            total = sum(record['trials'] for record in group)
            per_d[str(d)] = {'failure_frequency': failures / total, 'failures': failures, 'trials': total,
                             'median_ratio': float(np.median([record['median_ratio'] for record in group]))}
        frequencies = [per_d[str(d)]['failure_frequency'] for d in self.d_list]
        self.flags['frequency_non_increasing'] = bool(all(x >= y for x, y in zip(frequencies, frequencies[1:])))
        return {'per_d': per_d}

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        rows = [[int(d), stats['failure_frequency'], stats['median_ratio']] for d, stats in aggregate['per_d'].items()]
        return {'failure_vs_d': (['d', 'failure_frequency', 'median_ratio'], rows)}
