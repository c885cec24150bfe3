import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from errors import ParameterError
from stable import check_alpha

TAIL_TERMS = 100000


@dataclass(frozen=True, eq=False)
class PoissonWeights:
    """
    The K largest points xi_1 > xi_2 > ... of the Poisson process with intensity (alpha/2) x^{-alpha/2-1} dx, xi_k = Gamma_k^{-2/alpha} for unit-rate arrival times Gamma_k.

    Attributes:
        weights (np.ndarray): Strictly decreasing positive weights.
        alpha (float): Stable index.
        tail_mean (float): E sum_{k>K} xi_k, the mean mass dropped by the truncation.
    """
    weights: np.ndarray = field(repr=False)
    alpha: float
    tail_mean: float

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))


def truncated_tail_mean(alpha: float, truncation: int) -> float:
    """E sum_{k>K} Gamma_k^{-p}, p = 2/alpha, using E Gamma_k^{-p} = Gamma(k-p)/Gamma(k) and an integral remainder."""
    p = 2.0 / alpha
    first = truncation + 1
    if first <= p:
        return math.inf
    k = np.arange(first, first + TAIL_TERMS, dtype=float)
    partial = float(np.sum(np.exp(gammaln(k - p) - gammaln(k))))
    last = first + TAIL_TERMS
    return partial + last ** (1.0 - p) / (p - 1.0)


def weight_matrix(alpha: float, rows: int, truncation: int, rng: np.random.Generator) -> np.ndarray:
    """Independent weight vectors, one per row, from cumulative exponential arrivals."""
    arrivals = np.cumsum(rng.standard_exponential(size=(rows, truncation)), axis=1)
    return arrivals ** (-2.0 / alpha)


def sample_poisson_weights(alpha: float, truncation: int, rng: np.random.Generator) -> PoissonWeights:
    alpha = check_alpha(alpha)
    if truncation < 1:
        raise ParameterError(f"truncation K must be at least 1, got {truncation}", {'K': truncation})
    weights = weight_matrix(alpha, 1, int(truncation), rng)[0]
    return PoissonWeights(weights=weights, alpha=alpha, tail_mean=truncated_tail_mean(alpha, int(truncation)))
