from typing import Tuple, Union

import numpy as np
from scipy.special import gamma as gamma_fn

from errors import DomainError, ParameterError
from limitlaw.cone import ConeValue, in_cone, principal_power
from limitlaw.kernel import fractional_laplace
from stable import StableSampler, check_alpha, v_alpha

INPUT_SLACK = 1e-9


def _unpack(alpha: float, z: complex, x: Union[complex, ConeValue]) -> tuple:
    alpha = check_alpha(alpha)
    z = complex(z)
    if z.imag < 0.0 or z == 0:
        raise DomainError(f"phi and psi need z in the closed upper half plane minus 0, got {z}")
    value = x.value if isinstance(x, ConeValue) else complex(x)
    a = alpha / 2.0
    if not in_cone(value, a, INPUT_SLACK):
        raise DomainError(f"argument {value} lies outside K_{a}", {'x': [value.real, value.imag]})
    return a, z, value


def phi(alpha: float, z: complex, x: Union[complex, ConeValue], epsrel: float = 1e-10) -> complex:
    """
    phi_{alpha,z}(x) = Gamma(a)^{-1} int_0^inf t^{a-1} e^{itz} exp(-Gamma(1-a) t^a x) dt, a = alpha/2.
    Maps K_a into K_a.
    """
    a, z, value = _unpack(alpha, z, x)
    result, _ = fractional_laplace(-1j * z, gamma_fn(1.0 - a) * value, a, a, epsrel)
    return result / gamma_fn(a)


def psi(alpha: float, z: complex, x: Union[complex, ConeValue], epsrel: float = 1e-10) -> complex:
    """psi_{alpha,z}(x) = int_0^inf e^{itz} exp(-Gamma(1-a) t^a x) dt, with values in K_1."""
    a, z, value = _unpack(alpha, z, x)
    result, _ = fractional_laplace(-1j * z, gamma_fn(1.0 - a) * value, a, 1.0, epsrel)
    return result


def unit_subordinator_sigma(alpha: float) -> float:
    """Scale sigma of the positive alpha/2-stable law with E exp(-t S) = exp(-Gamma(1 - alpha/2) t^{alpha/2})."""
    a = alpha / 2.0
    return (gamma_fn(1.0 - a) / v_alpha(a)) ** (1.0 / a)


def _subordinated_bases(alpha: float, z: complex, x: Union[complex, ConeValue], count: int,
                        rng: np.random.Generator) -> Tuple[float, np.ndarray]:
    a, z, value = _unpack(alpha, z, x)
    if z.imag <= 0.0:
        raise DomainError(f"the subordinated representation needs Im z > 0, got {z}")
    if count < 2:
        raise ParameterError(f"count must be at least 2, got {count}", {'count': count})
    draws = StableSampler.sample_pos_stable(a, unit_subordinator_sigma(alpha), int(count), rng)
    # x = (-iw)^a, so -i(z + wS) = -iz + x^{1/a} S stays in the right half plane.
    return a, -1j * z + principal_power(value, 1.0 / a) * draws


def _mean_with_error(terms: np.ndarray) -> Tuple[complex, float]:
    spread = np.sqrt(np.var(terms.real) + np.var(terms.imag))
    return complex(np.mean(terms)), float(spread / np.sqrt(terms.size))


def phi_monte_carlo(alpha: float, z: complex, x: Union[complex, ConeValue], count: int,
                    rng: np.random.Generator) -> Tuple[complex, float]:
    """
    Estimates phi_{alpha,z}(x) as E (-i(z + wS))^{-alpha/2} with x = (-iw)^{alpha/2} and S positive alpha/2-stable.

    Returns:
        Tuple[complex, float]: The estimate and its standard error.
    """
    a, bases = _subordinated_bases(alpha, z, x, count, rng)
    return _mean_with_error(np.power(bases, -a))


def psi_monte_carlo(alpha: float, z: complex, x: Union[complex, ConeValue], count: int,
                    rng: np.random.Generator) -> Tuple[complex, float]:
    """Estimates psi_{alpha,z}(x) as E (-i(z + wS))^{-1}, drawn the same way as phi_monte_carlo."""
    _, bases = _subordinated_bases(alpha, z, x, count, rng)
    return _mean_with_error(1.0 / bases)
