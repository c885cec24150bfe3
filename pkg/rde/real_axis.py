import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from errors import ConvergenceError, ParameterError
from limitlaw.transforms import unit_subordinator_sigma
from logger import LOGGER_NAME
from stable import StableSampler, check_alpha

REAL_AXIS_ALPHA_MAX = 2.0 / 3.0


def _subordinator_pair(alpha: float, count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    sigma = unit_subordinator_sigma(alpha)
    first = StableSampler.sample_pos_stable(alpha / 2.0, sigma, count, rng)
    second = StableSampler.sample_pos_stable(alpha / 2.0, sigma, count, rng)
    return first, second


@dataclass(frozen=True)
class RealAxisSolution:
    """
    Solution (a, b) of the real-axis system at energy E.

    Attributes:
        a (float): E((E + a^{2/alpha} S - b^{2/alpha} S')^{-1})_-^{alpha/2}.
        b (float): E((E + a^{2/alpha} S - b^{2/alpha} S')^{-1})_+^{alpha/2}.
        residuals (Tuple[float, float]): Residuals of both equations on an independent validation sample.
        standard_errors (Tuple[float, float]): Monte Carlo standard errors of both right-hand sides.
        iterations (int): Damped iterations used.
        averaged (int): Iterates in the running mean that gives (a, b).
        trace (List[Tuple[float, float]]): Iterates, kept for diagnostics.
    """
    alpha: float
    energy: float
    a: float
    b: float
    residuals: Tuple[float, float]
    standard_errors: Tuple[float, float]
    iterations: int
    averaged: int = 0
    trace: List[Tuple[float, float]] = field(default_factory=list, repr=False)

    @property
    def within_error(self) -> bool:
        return all(res <= 3.0 * se for res, se in zip(self.residuals, self.standard_errors))


def _system_terms(alpha: float, energy: float, a: float, b: float, s_plus: np.ndarray, s_minus: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    power = 2.0 / alpha
    denominator = energy + a ** power * s_plus - b ** power * s_minus
    with np.errstate(divide='ignore'):
        inverse = 1.0 / denominator
    negative = np.clip(-inverse, 0.0, None) ** (alpha / 2.0)
    positive = np.clip(inverse, 0.0, None) ** (alpha / 2.0)
    return negative, positive


def _standard_errors(negative: np.ndarray, positive: np.ndarray) -> Tuple[float, float]:
    root = math.sqrt(float(negative.size))
    return float(np.std(negative)) / root, float(np.std(positive)) / root


def solve_real_axis_ab(alpha: float, energy: float, mc_size: int, seed: int, damping: float = 0.5, tolerance: float = 0.05,
                       burn_in: int = 50, check_every: int = 25, max_iter: int = 5000) -> RealAxisSolution:
    """
    Solves the real-axis (a, b) system by damped iteration over one fixed set of (S, S') pairs.

    On a finite sample the map jumps whenever a denominator crosses zero, so the iterates settle into a band around the fixed point rather than onto it. After `burn_in` iterations the running mean of the iterates is the estimate; it is accepted once it moves by less than `tolerance` Monte Carlo standard errors between two checks `check_every` iterations apart.

    The system at -E is the system at E with S and S' exchanged. It is solved on the same draws at |E| and returned as (b, a), so both signs see identical arithmetic.

    Args:
        alpha (float): Stable index in (0, 2/3).
        energy (float): Real energy E, nonzero.
        mc_size (int): Number of (S, S') pairs.
        seed (int): Seed of the draws; the validation sample uses the next stream.
        damping (float): Weight of the new iterate, in (0, 1].
        tolerance (float): Accepted movement of the running mean, in Monte Carlo standard errors.
        burn_in (int): Iterations discarded before averaging.
        check_every (int): Iterations between two convergence checks.
        max_iter (int): Iteration limit.

    Returns:
        RealAxisSolution: The averaged fixed point with validation residuals.

    Raises:
        ParameterError: For alpha outside (0, 2/3), E = 0, a sample size below 2 or invalid iteration settings.
        ConvergenceError: When the running mean does not settle, with the last iterates.
    """
    alpha = check_alpha(alpha, upper=REAL_AXIS_ALPHA_MAX)
    if energy == 0.0:
        raise ParameterError("real-axis system needs E != 0", {'E': energy})
    if mc_size < 2:
        raise ParameterError(f"mc_size must be at least 2, got {mc_size}", {'mc_size': mc_size})
    if not 0.0 < damping <= 1.0:
        raise ParameterError(f"damping must lie in (0, 1], got {damping}", {'damping': damping})
    if not tolerance > 0.0 or burn_in < 0 or check_every < 1 or max_iter <= burn_in:
        raise ParameterError("invalid iteration settings", {'tolerance': tolerance, 'burn_in': burn_in,
                                                             'check_every': check_every, 'max_iter': max_iter})
    logger = logging.getLogger(LOGGER_NAME)
    streams = np.random.SeedSequence(seed).spawn(2)
    draws = _subordinator_pair(alpha, int(mc_size), np.random.default_rng(streams[0]))
    check = _subordinator_pair(alpha, int(mc_size), np.random.default_rng(streams[1]))
    level = abs(energy)
    u, v = 0.0, level ** (-alpha / 2.0)
    trace = [(u, v)]
    sum_u = sum_v = 0.0
    averaged = 0
    last_mean = None
    iteration = 0
    converged = False
    for iteration in range(1, max_iter + 1):
        negative, positive = _system_terms(alpha, level, u, v, *draws)
        u = (1.0 - damping) * u + damping * float(np.mean(negative))
        v = (1.0 - damping) * v + damping * float(np.mean(positive))
        if not (math.isfinite(u) and math.isfinite(v)):
            raise ConvergenceError(f"real-axis iteration left the finite range at E={energy}", {'trace': trace[-20:]})
        trace.append((u, v))
        if iteration <= burn_in:
            continue
        sum_u += u
        sum_v += v
        averaged += 1
        if averaged % check_every:
            continue
        mean = (sum_u / averaged, sum_v / averaged)
        if last_mean is not None:
            limit = tolerance * max(max(_standard_errors(negative, positive)), 1e-15)
            if max(abs(mean[0] - last_mean[0]), abs(mean[1] - last_mean[1])) < limit:
                converged = True
                break
        last_mean = mean
    if not converged:
        raise ConvergenceError(f"real-axis system not converged at E={energy} after {max_iter} iterations",
                               {'trace': trace[-20:], 'alpha': alpha, 'E': energy})
    u, v = sum_u / averaged, sum_v / averaged
    negative, positive = _system_terms(alpha, level, u, v, *check)
    residuals = (abs(float(np.mean(negative)) - u), abs(float(np.mean(positive)) - v))
    errors = _standard_errors(negative, positive)
    if energy < 0.0:
        u, v = v, u
        residuals, errors = residuals[::-1], errors[::-1]
        trace = [(second, first) for first, second in trace]
    logger.debug(f"Real-axis system at alpha={alpha}, E={energy}: a={u:.6g}, b={v:.6g} from {averaged} averaged iterates")
    return RealAxisSolution(alpha=alpha, energy=float(energy), a=u, b=v, residuals=residuals, standard_errors=errors,
                            iterations=iteration, averaged=averaged, trace=trace)


def real_axis_law_samples(solution: RealAxisSolution, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of R_0(E) = -(E + a^{2/alpha} S - b^{2/alpha} S')^{-1} for a solved (a, b), returned as complex values."""
    if count < 1:
        raise ParameterError(f"count must be positive, got {count}")
    s_plus, s_minus = _subordinator_pair(solution.alpha, int(count), rng)
    power = 2.0 / solution.alpha
    denominator = solution.energy + solution.a ** power * s_plus - solution.b ** power * s_minus
    return (-1.0 / denominator).astype(complex)
