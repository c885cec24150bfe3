import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from errors import DomainError

ARG_SLACK = 1e-12
UNIT_SLACK = 1e-9

ComplexLike = Union[complex, np.ndarray]


def in_cone(value: ComplexLike, index: float, slack: float = ARG_SLACK) -> Union[bool, np.ndarray]:
    """Membership in K_index = {|arg w| <= pi index / 2}; zero belongs to every cone."""
    value = np.asarray(value, dtype=complex)
    inside = (np.abs(np.angle(value)) <= math.pi * index / 2.0 + slack) | (value == 0)
    return bool(inside) if inside.ndim == 0 else inside


@dataclass(frozen=True)
class ConeValue:
    """A complex number checked to lie in the cone K_{cone_index}."""
    value: complex
    cone_index: float

    def __post_init__(self) -> None:
        if not 0.0 < self.cone_index <= 2.0:
            raise DomainError(f"cone index must lie in (0, 2], got {self.cone_index}")
        if not in_cone(self.value, self.cone_index):
            raise DomainError(f"{self.value} lies outside K_{self.cone_index}",
                              {'value': [self.value.real, self.value.imag], 'cone_index': self.cone_index})


def bilinear(h: ComplexLike, u: complex) -> ComplexLike:
    """h.u = Re(u) h + Im(u) conj(h)."""
    return u.real * h + u.imag * np.conj(h)


def check_quarter_circle(u: complex) -> complex:
    u = complex(u)
    if u.real < -UNIT_SLACK or u.imag < -UNIT_SLACK or abs(abs(u) - 1.0) > UNIT_SLACK:
        raise DomainError(f"u must lie on the closed quarter circle, got {u}", {'u': [u.real, u.imag]})
    return u


def principal_power(value: complex, exponent: float) -> complex:
    if value == 0:
        return 0j
    return cmath.exp(exponent * cmath.log(value))
