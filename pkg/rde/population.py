import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.special import gamma as gamma_fn

from errors import DomainError, ParameterError
from limitlaw.cone import bilinear, check_quarter_circle
from logger import LOGGER_NAME
from rde.poisson import truncated_tail_mean, weight_matrix
from stable import check_alpha

RESAMPLE_THRESHOLD = 1e-14
MAX_RESAMPLE_ROUNDS = 100


@dataclass(frozen=True, eq=False)
class ResolventPool:
    """
    Population approximating the law of R_0(z) for the recursive equation R_0 = -(z + sum_k xi_k R_k)^{-1}.

    Attributes:
        samples (np.ndarray): Complex samples in the closed upper half plane.
        z (complex): Spectral parameter.
        alpha (float): Stable index.
        generation (int): Number of updates applied since the initial pool.
    """
    samples: np.ndarray = field(repr=False)
    z: complex
    alpha: float
    generation: int = 0

    @classmethod
    def initial(cls, z: complex, alpha: float, size: int) -> 'ResolventPool':
        z = complex(z)
        if not z.imag > 0.0:
            raise DomainError(f"population dynamics needs Im z > 0, got {z}", {'z': [z.real, z.imag]})
        if size < 1:
            raise ParameterError(f"pool size must be positive, got {size}")
        samples = np.full(int(size), -1.0 / z, dtype=complex)
        return cls(samples=samples, z=z, alpha=check_alpha(alpha))

    def restarted(self, z: complex) -> 'ResolventPool':
        """Same samples used as the starting population at another spectral parameter."""
        z = complex(z)
        if not z.imag > 0.0:
            raise DomainError(f"population dynamics needs Im z > 0, got {z}", {'z': [z.real, z.imag]})
        return ResolventPool(samples=self.samples, z=z, alpha=self.alpha, generation=0)

    @property
    def size(self) -> int:
        return int(self.samples.size)

    def mean_abs_frac(self) -> float:
        return float(np.mean(np.abs(self.samples) ** (self.alpha / 2.0)))

    def mean_im_frac(self) -> float:
        return float(np.mean(np.clip(self.samples.imag, 0.0, None) ** (self.alpha / 2.0)))


def frac_moment_terms(samples: np.ndarray, u: complex, kappa: float) -> np.ndarray:
    u = check_quarter_circle(u)
    return bilinear(-1j * samples, u) ** kappa


def rde_frac_moment_stats(pool: ResolventPool, u: complex, kappa: float) -> Tuple[complex, float]:
    """Gamma(1 - kappa) mean(((-iR).u)^kappa) and its Monte Carlo standard error."""
    if pool.size == 0:
        raise ParameterError("fractional moment of an empty pool")
    if not 0.0 < kappa <= 1.0:
        raise ParameterError(f"kappa must lie in (0, 1], got {kappa}", {'kappa': kappa})
    terms = frac_moment_terms(pool.samples, u, kappa)
    prefactor = 1.0 if kappa == 1.0 else gamma_fn(1.0 - kappa)
    spread = math.sqrt(float(np.var(terms.real) + np.var(terms.imag)) / max(terms.size, 1))
    return complex(prefactor * np.mean(terms)), prefactor * spread


def rde_frac_moment(pool: ResolventPool, u: complex, kappa: float) -> complex:
    return rde_frac_moment_stats(pool, u, kappa)[0]


@dataclass(frozen=True)
class DynamicsConfig:
    pool_size: int = 100000
    truncation: int = 200
    burn_in: int = 30
    generations: int = 50
    chunk_size: int = 5000
    workers: int = 4
    average_generations: int = 10

    @classmethod
    def from_config(cls, config: Optional[Dict[str, Any]]) -> 'DynamicsConfig':
        config = config or {}
        return cls(**{name: int(config[name]) for name in cls.__dataclass_fields__ if name in config})


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    mean_abs_frac: float
    mean_im_frac: float


@dataclass(frozen=True, eq=False)
class DynamicsRun:
    """Final pool of a population dynamics run with its per-generation statistics."""
    pool: ResolventPool = field(repr=False)
    history: Tuple[GenerationStats, ...]
    stationarity_ks: float
    ks_threshold: float
    resampled: int
    tail_mean: float

    @property
    def stationary(self) -> bool:
        return self.stationarity_ks <= 2.0 * self.ks_threshold

    def average(self, attribute: str, count: int) -> float:
        values = [getattr(stat, attribute) for stat in self.history[-count:]]
        return float(np.mean(values))


class PopulationDynamics:
    """
    Population dynamics for the recursive distributional equation.

    Each generation draws, for every new sample, K fresh Poisson weights and K uniform parents from the previous pool. The pool is split in fixed chunks, each with its own generator derived from (seed, generation, chunk), so results do not depend on the number of workers.
    """

    def __init__(self, alpha: float, config: Optional[DynamicsConfig] = None) -> None:
        self.alpha: float = check_alpha(alpha)
        self.config: DynamicsConfig = config or DynamicsConfig()
        self.logger: logging.Logger = logging.getLogger(LOGGER_NAME)
        self.tail_mean: float = truncated_tail_mean(self.alpha, self.config.truncation) if self.config.truncation > 0 else math.inf

    def _update_chunk(self, old: np.ndarray, z: complex, rows: int, seed: Sequence[int]) -> Tuple[np.ndarray, int]:
        rng = np.random.default_rng(np.random.SeedSequence(list(seed)))
        truncation = self.config.truncation
        if truncation == 0:
            return np.full(rows, -1.0 / z, dtype=complex), 0
        weights = weight_matrix(self.alpha, rows, truncation, rng)
        parents = rng.integers(0, old.size, size=(rows, truncation))
        denominator = z + np.sum(weights * old[parents], axis=1)
        resampled = 0
        for _ in range(MAX_RESAMPLE_ROUNDS):
            bad = np.abs(denominator) < RESAMPLE_THRESHOLD
            if not np.any(bad):
                break
            count = int(bad.sum())
            resampled += count
            weights = weight_matrix(self.alpha, count, truncation, rng)
            parents = rng.integers(0, old.size, size=(count, truncation))
            denominator[bad] = z + np.sum(weights * old[parents], axis=1)
        return -1.0 / denominator, resampled

    def step(self, pool: ResolventPool, seed: int, executor: Optional[ThreadPoolExecutor] = None) -> Tuple[ResolventPool, int]:
        """One generation of the population update."""
        if pool.size == 0:
            raise ParameterError("population dynamics step on an empty pool")
        chunk = max(1, self.config.chunk_size)
        starts = list(range(0, pool.size, chunk))
        tasks = [(pool.samples, pool.z, min(chunk, pool.size - start), (int(seed), pool.generation, index))
                 for index, start in enumerate(starts)]
        if executor is None:
            results = [self._update_chunk(*task) for task in tasks]
        else:
            results = list(executor.map(lambda task: self._update_chunk(*task), tasks))
        samples = np.concatenate([values for values, _ in results])
        resampled = sum(count for _, count in results)
        if resampled:
            self.logger.warning(f"Resampled {resampled} near-singular denominators at generation {pool.generation + 1}")
        samples.imag = np.maximum(samples.imag, 0.0)
        return ResolventPool(samples=samples, z=pool.z, alpha=pool.alpha, generation=pool.generation + 1), resampled

    def run(self, z: complex, seed: int, generations: Optional[int] = None, pool: Optional[ResolventPool] = None) -> DynamicsRun:
        """
        Runs burn-in plus the requested generations from a fresh pool or from `pool` moved to z.
        """
        cfg = self.config
        total = cfg.burn_in + (cfg.generations if generations is None else generations)
        current = ResolventPool.initial(z, self.alpha, cfg.pool_size) if pool is None else pool.restarted(z)
        if self.tail_mean * np.mean(np.abs(current.samples)) > 1e-3 * abs(current.z):
            self.logger.warning(f"Truncation K={cfg.truncation} drops mean weight {self.tail_mean:.3e}, above 1e-3 |z| for alpha={self.alpha}")
        history: List[GenerationStats] = []
        snapshots: List[np.ndarray] = []
        resampled = 0
        with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as executor:
            for _ in range(total):
                current, count = self.step(current, seed, executor)
                resampled += count
                history.append(GenerationStats(current.generation, current.mean_abs_frac(), current.mean_im_frac()))
                snapshots.append(current.samples.imag)
                snapshots = snapshots[-6:]
        if len(snapshots) == 6:
            ks = float(stats.ks_2samp(snapshots[0], snapshots[-1]).statistic)
        else:
            ks = math.nan
        size = current.size
        threshold = 1.95 * math.sqrt(2.0 / size)
        self.logger.debug(f"Population at z={current.z}: {total} generations, mean |R|^(a/2)={history[-1].mean_abs_frac:.5g}, KS={ks:.4g}")
        return DynamicsRun(pool=current, history=tuple(history), stationarity_ks=ks, ks_threshold=threshold,
                           resampled=resampled, tail_mean=self.tail_mean)


@dataclass(frozen=True)
class VanishingTable:
    energy: float
    etas: Tuple[float, ...]
    mean_im_frac: Tuple[float, ...]
    mean_abs_frac: Tuple[float, ...]
    slope: float
    generations: int
    diagnostics: Dict[str, Any]


def vanishing_imag_diagnostic(dynamics: PopulationDynamics, energy: float, eta_list: Sequence[float], seed: int) -> VanishingTable:
    """
    Mean of (Im R_0)^{alpha/2} at z = E + i eta for each eta of a decreasing list, each run warm-started from the previous pool, with the log-log slope against eta.
    """
    etas = [float(eta) for eta in eta_list]
    if not etas or any(eta <= 0.0 for eta in etas):
        raise ParameterError(f"eta list must contain positive values, got {etas}")
    cfg = dynamics.config
    pool = None
    im_values, abs_values, ks_values, resampled = [], [], [], 0
    for index, eta in enumerate(etas):
        run = dynamics.run(complex(energy, eta), seed + index, pool=pool)
        pool = run.pool
        im_values.append(run.average('mean_im_frac', cfg.average_generations))
        abs_values.append(run.average('mean_abs_frac', cfg.average_generations))
        ks_values.append(run.stationarity_ks)
        resampled += run.resampled
    positive = [(eta, value) for eta, value in zip(etas, im_values) if value > 0.0]
    if len(positive) >= 2:
        slope = float(np.polyfit(np.log([p[0] for p in positive]), np.log([p[1] for p in positive]), 1)[0])
    else:
        slope = math.nan
    return VanishingTable(energy=float(energy), etas=tuple(etas), mean_im_frac=tuple(im_values), mean_abs_frac=tuple(abs_values),
                          slope=slope, generations=cfg.burn_in + cfg.generations,
                          diagnostics={'stationarity_ks': ks_values, 'resampled': resampled, 'tail_mean': dynamics.tail_mean})
