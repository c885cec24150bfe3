import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from errors import DomainError, ParameterError
from logger import LOGGER_NAME
from stable.params import QuadraticFormSplit, SeriesResult, StableParams, check_alpha, v_alpha, w_alpha

SERIES_RELATIVE_STOP = 1e-14
SERIES_DIVERGENCE_RUN = 20
PSD_TOLERANCE = 1e-10


class StableSampler:
    """
    Samplers for the stable laws used by the ensemble and the distributional identities relating them.

    All methods are pure given the numpy Generator passed in, so independent generators can be used from several threads.

    Static Methods:
        sample_sym_stable: Symmetric draws with characteristic function exp(-w_alpha |t|^alpha).
        sample_pos_stable: Positive draws with Laplace transform exp(-sigma^a t^a v_a).
        quadratic_form_split: One draw of the Gaussian-norm / stable-factor decomposition of <X, AX>.
        quadratic_form_samples: Vectorized products of the same decomposition.
        inverse_stable_exp_moment: Series for E exp(c S^{-alpha/(1-alpha)}) with a divergence flag.
        critical_constant: Threshold c above which that series diverges.
        weighted_squares_laplace: Both sides of the weighted-squares Laplace identity.
        negative_moment_ratio: Empirical E|x - sigma S|^{-beta} |x|^{beta} over a grid.
    """

    @staticmethod
    def _cms_symmetric(alpha: float, count: int, rng: np.random.Generator) -> np.ndarray:
        v = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size=count)
        if alpha == 1.0:
            return np.tan(v)
        w = rng.standard_exponential(size=count)
        return (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
                * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha))

    @staticmethod
    def sample_sym_stable(alpha: float, count: int, rng: np.random.Generator, sigma: Optional[float] = None) -> np.ndarray:
        """
        Draws symmetric alpha-stable variables by the Chambers-Mallows-Stuck transform.

        With the default scale sigma = w_alpha^{1/alpha} the characteristic function is exactly exp(-w_alpha |t|^alpha), so the one-sided tail behaves as P(X >= t) ~ t^{-alpha}.

        Args:
            alpha (float): Index in (0, 2).
            count (int): Number of draws; zero returns an empty vector.
            rng (np.random.Generator): Source of randomness.
            sigma (Optional[float]): Scale override, cf exp(-sigma^alpha |t|^alpha).

        Returns:
            np.ndarray: Vector of `count` draws.
        """
        alpha = check_alpha(alpha)
        if count < 0:
            raise ParameterError(f"count must be non-negative, got {count}", {'count': count})
        if count == 0:
            return np.empty(0, dtype=float)
        scale = w_alpha(alpha) ** (1.0 / alpha) if sigma is None else float(sigma)
        return scale * StableSampler._cms_symmetric(alpha, int(count), rng)

    @staticmethod
    def sample_pos_stable(alpha_half: float, sigma: float, count: int, rng: np.random.Generator) -> np.ndarray:
        """
        Draws totally skewed positive stable variables Stab_a(1, sigma), 0 < a < 1, through Kanter's representation of the unit law E exp(-t S) = exp(-t^a), rescaled so that E exp(-t S) = exp(-sigma^a t^a v_a).

        Raises:
            ParameterError: If alpha_half is not in (0, 1) or sigma is not positive.
        """
        a = check_alpha(alpha_half, upper=1.0, name='alpha_half')
        if not sigma > 0.0:
            raise ParameterError(f"sigma must be positive, got {sigma}", {'sigma': sigma})
        if count <= 0:
            return np.empty(0, dtype=float)
        u = rng.uniform(0.0, math.pi, size=count)
        w = rng.standard_exponential(size=count)
        zolotarev = (np.sin(a * u) ** (a / (1.0 - a)) * np.sin((1.0 - a) * u)
                     / np.sin(u) ** (1.0 / (1.0 - a)))
        unit = (zolotarev / w) ** ((1.0 - a) / a)
        return sigma * v_alpha(a) ** (1.0 / a) * unit

    @staticmethod
    def _psd_sqrt(psd_matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(psd_matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {matrix.shape}")
        if not np.allclose(matrix, matrix.T, atol=1e-12 * max(1.0, np.abs(matrix).max(initial=0.0))):
            raise DomainError("matrix is not symmetric")
        eigenvalues, eigenvectors = linalg.eigh(matrix)
        norm = np.abs(eigenvalues).max(initial=0.0)
        if eigenvalues.size and eigenvalues[0] < -PSD_TOLERANCE * norm:
            raise DomainError(f"matrix is not positive semidefinite, smallest eigenvalue {eigenvalues[0]:.3e}",
                              {'min_eigenvalue': float(eigenvalues[0])})
        eigenvalues = np.clip(eigenvalues, 0.0, None)
        return (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T

    @staticmethod
    def quadratic_form_samples(psd_matrix: np.ndarray, alpha: float, count: int, rng: np.random.Generator,
                               sigma: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Returns `count` independent pairs (||A^{1/2} G||_alpha^2, S) with S positive alpha/2-stable of scale 2 sigma^2 v_{alpha/2}^{-2/alpha}. Their products are distributed as <X, AX> for X with i.i.d. Stab_alpha(0, sigma) entries.
        """
        alpha = check_alpha(alpha)
        params = StableParams.entry_law(alpha) if sigma is None else StableParams(alpha, 0.0, sigma)
        root = StableSampler._psd_sqrt(psd_matrix)
        gauss = root @ rng.standard_normal(size=(root.shape[0], count))
        norm_sq = np.sum(np.abs(gauss) ** alpha, axis=0) ** (2.0 / alpha)
        a = alpha / 2.0
        scale = 2.0 * params.sigma ** 2 * v_alpha(a) ** (-2.0 / alpha)
        stable_factor = StableSampler.sample_pos_stable(a, scale, count, rng)
        return norm_sq, stable_factor

    @staticmethod
    def quadratic_form_split(psd_matrix: np.ndarray, alpha: float, rng: np.random.Generator,
                             sigma: Optional[float] = None) -> QuadraticFormSplit:
        norm_sq, stable_factor = StableSampler.quadratic_form_samples(psd_matrix, alpha, 1, rng, sigma)
        return QuadraticFormSplit(gauss_norm_sq=float(norm_sq[0]), stable_factor=float(stable_factor[0]))

    @staticmethod
    def critical_constant(alpha: float, sigma: float) -> float:
        """Limit of the term ratio of the inverse-stable series equals one at this c."""
        alpha = check_alpha(alpha, upper=1.0)
        p = alpha / (1.0 - alpha)
        sigma_hat = sigma * v_alpha(alpha) ** (1.0 / alpha)
        return sigma_hat ** p * p ** p * (1.0 - alpha) ** (1.0 / (1.0 - alpha))

    @staticmethod
    def inverse_stable_exp_moment(c: float, alpha: float, sigma: float, terms: int) -> SeriesResult:
        """
        Evaluates E exp(c S^{-p}), p = alpha/(1 - alpha), for S ~ Stab_alpha(1, sigma), through the series
        1 + alpha^{-1} sum_k c^k sigma_hat^{-kp} Gamma(kp/alpha) / (Gamma(kp) Gamma(k+1)), sigma_hat = sigma v_alpha^{1/alpha}.

        Summation stops once a term drops below 1e-14 times the partial sum. Twenty consecutive increasing terms set the divergence flag and the value to +inf.

        Args:
            c (float): Positive exponent constant.
            alpha (float): Index in (0, 1).
            sigma (float): Scale of S.
            terms (int): Maximum number of terms, at least 10.

        Returns:
            SeriesResult: Value, divergence flag, terms used and the analytic threshold.
        """
        alpha = check_alpha(alpha, upper=1.0)
        if not c > 0.0:
            raise ParameterError(f"c must be positive, got {c}", {'c': c})
        if not sigma > 0.0:
            raise ParameterError(f"sigma must be positive, got {sigma}", {'sigma': sigma})
        if terms < 10:
            raise ParameterError(f"terms must be at least 10, got {terms}", {'terms': terms})
        p = alpha / (1.0 - alpha)
        log_sigma_hat = math.log(sigma) + math.log(v_alpha(alpha)) / alpha
        log_c = math.log(c)
        critical = StableSampler.critical_constant(alpha, sigma)
        total = 1.0
        previous = None
        increasing = 0
        used = 0
        for k in range(1, terms + 1):
            used = k
            log_term = (k * log_c - k * p * log_sigma_hat + gammaln(k * p / alpha)
                        - gammaln(k * p) - gammaln(k + 1.0))
            term = math.exp(log_term) / alpha if log_term < 700.0 else math.inf
            if previous is not None and term > previous:
                increasing += 1
            else:
                increasing = 0
            if increasing >= SERIES_DIVERGENCE_RUN or math.isinf(term):
                logging.getLogger(LOGGER_NAME).debug(f"Inverse-stable series diverges at c={c}, alpha={alpha} (threshold {critical:.6g})")
                return SeriesResult(value=math.inf, diverged=True, terms_used=used, critical_c=critical)
            total += term
            previous = term
            if term < SERIES_RELATIVE_STOP * total:
                break
        return SeriesResult(value=total, diverged=False, terms_used=used, critical_c=critical)

    @staticmethod
    def weighted_squares_laplace(weights: Sequence[complex], alpha: float, count: int, rng: np.random.Generator,
                                 sigma: Optional[float] = None) -> Tuple[complex, complex]:
        """
        Monte Carlo estimates of both sides of
        E exp(-sum_k rho_k X_k^2) = E exp(-2^{alpha/2} sigma^alpha sum_k rho_k^{alpha/2} |g_k|^alpha), Re rho_k >= 0.

        Returns:
            Tuple[complex, complex]: (direct side, Gaussian side).
        """
        alpha = check_alpha(alpha)
        rho = np.asarray(weights, dtype=complex)
        if np.any(rho.real < 0.0):
            raise DomainError("weights must have non-negative real part")
        params = StableParams.entry_law(alpha) if sigma is None else StableParams(alpha, 0.0, sigma)
        x = StableSampler.sample_sym_stable(alpha, count * rho.size, rng, params.sigma).reshape(count, rho.size)
        direct = np.mean(np.exp(-(x ** 2) @ rho))
        g = rng.standard_normal(size=(count, rho.size))
        exponent = 2.0 ** (alpha / 2.0) * params.sigma ** alpha * (np.abs(g) ** alpha) @ (rho ** (alpha / 2.0))
        gaussian = np.mean(np.exp(-exponent))
        return complex(direct), complex(gaussian)

    @staticmethod
    def negative_moment_ratio(alpha: float, beta: float, xs: Sequence[float], sigmas: Sequence[float], count: int,
                              rng: np.random.Generator) -> np.ndarray:
        """
        Table of E|x - sigma S|^{-beta} |x|^{beta} for S a symmetric entry-law draw, rows indexed by sigma and columns by x. A single bound over the whole table is the negative-moment domination property.
        """
        if not 0.0 < beta < 1.0:
            raise ParameterError(f"beta must lie in (0, 1), got {beta}", {'beta': beta})
        draws = StableSampler.sample_sym_stable(alpha, count, rng)
        table = np.empty((len(sigmas), len(xs)))
        for i, sigma in enumerate(sigmas):
            for j, x in enumerate(xs):
                table[i, j] = np.mean(np.abs(x - sigma * draws) ** (-beta)) * abs(x) ** beta
        return table
