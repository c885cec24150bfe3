import math
from dataclasses import dataclass

from scipy.special import gamma as gamma_fn

from errors import ParameterError


def w_alpha(alpha: float) -> float:
    """Fourier exponent constant of the entry law, E exp(itX) = exp(-w_alpha |t|^alpha)."""
    return math.pi / (math.sin(math.pi * alpha / 2.0) * gamma_fn(alpha))


def v_alpha(alpha: float) -> float:
    """Laplace exponent constant of Stab_alpha(1, sigma), 0 < alpha < 1."""
    return 2.0 / math.pi * math.sin(math.pi * alpha / 2.0) * gamma_fn(1.0 - alpha) * gamma_fn(alpha)


def check_alpha(alpha: float, upper: float = 2.0, name: str = 'alpha') -> float:
    try:
        value = float(alpha)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a real number, got {alpha!r}", {name: alpha})
    if not 0.0 < value < upper or math.isnan(value):
        raise ParameterError(f"{name} must lie strictly inside (0, {upper}), got {value}", {name: value})
    return value


@dataclass(frozen=True)
class StableParams:
    """
    Parameters of a stable law Stab_alpha(beta, sigma).

    Attributes:
        alpha (float): Index in (0, 2), endpoints rejected.
        beta (float): Skewness in [-1, 1].
        sigma (float): Scale, strictly positive.
    """
    alpha: float
    beta: float = 0.0
    sigma: float = 1.0

    def __post_init__(self) -> None:
        check_alpha(self.alpha)
        if not -1.0 <= self.beta <= 1.0:
            raise ParameterError(f"beta must lie in [-1, 1], got {self.beta}", {'beta': self.beta})
        if not self.sigma > 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}", {'sigma': self.sigma})

    @classmethod
    def entry_law(cls, alpha: float) -> 'StableParams':
        """Symmetric law of the matrix entries, sigma^alpha = w_alpha."""
        alpha = check_alpha(alpha)
        return cls(alpha=alpha, beta=0.0, sigma=w_alpha(alpha) ** (1.0 / alpha))

    @property
    def w_alpha(self) -> float:
        return w_alpha(self.alpha)

    @property
    def v_alpha(self) -> float:
        if self.alpha >= 1.0:
            raise ParameterError(f"v_alpha is defined for alpha < 1, got {self.alpha}", {'alpha': self.alpha})
        return v_alpha(self.alpha)


@dataclass(frozen=True)
class QuadraticFormSplit:
    """One draw of <X, AX> written as ||A^{1/2} G||_alpha^2 times a positive alpha/2-stable factor."""
    gauss_norm_sq: float
    stable_factor: float

    @property
    def product(self) -> float:
        return self.gauss_norm_sq * self.stable_factor


@dataclass(frozen=True)
class SeriesResult:
    """Partial sum of the inverse-stable exponential moment series."""
    value: float
    diverged: bool
    terms_used: int
    critical_c: float
