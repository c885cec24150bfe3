import logging
import time
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

import numpy as np

from errors import OutOfRegimeError, ParameterError
from experiments.report import ExperimentReport, PlotData
from logger import LOGGER_NAME

T = TypeVar('T')


class BaseExperiment(ABC):
    """
    Base class of the seeded experiments. A subclass draws its trials in `run_trials`, reduces them in `aggregate` and may expose CSV tables through `plot_data`.

    Trial seeds come from one SeedSequence per (master seed, stream), so every record is reproducible from the master seed alone and independent of the worker count.

    Attributes:
        name (str): Command name used for the report.
        parameters (Dict[str, Any]): Resolved parameters.
        seed (int): Master seed.
        workers (int): Worker threads for trials.
        strict_regime (bool): Raise OutOfRegimeError instead of flagging out-of-regime parameters.
        flags (Dict[str, Any]): Criterion flags collected during the run.
    """
    name: str = 'experiment'
    required: tuple = ()

    def __init__(self, parameters: Dict[str, Any], seed: int, workers: int = 1, version: str = '') -> None:
        self.logger: logging.Logger = logging.getLogger(LOGGER_NAME)
        self.parameters: Dict[str, Any] = dict(parameters)
        missing = [key for key in self.required if key not in self.parameters]
        if missing:
            raise ParameterError(f"{self.name} is missing parameters: {missing}", {'missing': missing})
        self.seed: int = int(seed)
        self.workers: int = max(1, int(workers))
        self.version: str = version
        self.strict_regime: bool = bool(self.parameters.get('strict_regime', False))
        self.flags: Dict[str, Any] = {}

    def param(self, key: str, default: Any = None) -> Any:
        return self.parameters.get(key, default)

    def trial_seeds(self, count: int, stream: int = 0) -> List[int]:
        """Deterministic 63-bit seeds for `count` trials of one stream."""
        state = np.random.SeedSequence([self.seed, int(stream)]).generate_state(int(count), dtype=np.uint64)
        return [int(value >> np.uint64(1)) for value in state]

    def map_trials(self, function: Callable[..., T], tasks: Iterable[Any]) -> List[T]:
        """Applies `function` to every task on the worker pool, keeping the task order."""
        tasks = list(tasks)
        if self.workers == 1 or len(tasks) <= 1:
            return [function(task) for task in tasks]
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            return list(executor.map(function, tasks))

    def mark_out_of_regime(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        if self.strict_regime:
            raise OutOfRegimeError(message, details)
        self.logger.warning(f"{self.name}: {message}")
        self.flags['out_of_regime'] = True
        self.flags.setdefault('regime_messages', []).append(message)

    def check_regime(self) -> None:
        """Hook for precondition checks that mark the run out of regime."""

    @abstractmethod
    def run_trials(self) -> List[Dict[str, Any]]:
        """Runs every trial and returns the records, each carrying its seed."""

    @abstractmethod
    def aggregate(self, records: List[Dict[str, Any]]) -> Dict[str, Any]:
        """Reduces the records to aggregate statistics and sets criterion flags."""

    def plot_data(self, records: List[Dict[str, Any]], aggregate: Dict[str, Any]) -> PlotData:
        return {}

    def run(self) -> ExperimentReport:
        self.logger.info(f"{self.name} started with seed {self.seed} and {self.workers} workers")
        self.flags.setdefault('out_of_regime', False)
        started = time.perf_counter()
        self.check_regime()
        records = self.run_trials()
        trials_done = time.perf_counter()
        aggregate = self.aggregate(records)
        finished = time.perf_counter()
        report = ExperimentReport(command=self.name, version=self.version, config={**self.parameters, 'seed': self.seed},
                                  records=records, aggregate=aggregate, flags=dict(self.flags),
                                  plot_data=self.plot_data(records, aggregate),
                                  timings={'trials': trials_done - started, 'aggregate': finished - trials_done,
                                           'total': finished - started})
        self.logger.info(f"{self.name} finished: {len(records)} records, flags {self.flags}")
        return report
