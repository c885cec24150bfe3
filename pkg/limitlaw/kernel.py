import cmath
import math
import warnings
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.integrate import IntegrationWarning
from scipy.special import gamma as gamma_fn

from errors import DomainError, NumericalError

DECAY_LOG = 45.0
ARG_MARGIN = 0.05
QUAD_LIMIT = 400
QUAD_FAILURE_FACTOR = 100.0


def _rotation(A: complex, B: complex, a: float) -> float:
    """
    Angle of the ray r e^{i theta} that turns A onto the positive axis, clipped so that B e^{i a theta} keeps a positive real part. Both constraints hold on the whole swept sector, so the contour may be rotated.
    """
    target = -cmath.phase(A) if A != 0 else 0.0
    if B == 0:
        return target
    arg_b = cmath.phase(B)
    margin = min(ARG_MARGIN, (math.pi / 2.0 - abs(arg_b)) / 2.0)
    low = (-math.pi / 2.0 + margin - arg_b) / a
    high = (math.pi / 2.0 - margin - arg_b) / a
    return min(max(target, low), high)


def _cutoff(A: complex, B: complex, a: float) -> float:
    cutoffs = []
    if A.real > 0.0:
        cutoffs.append((DECAY_LOG / A.real) ** a)
    if B.real > 0.0:
        cutoffs.append(DECAY_LOG / B.real)
    if not cutoffs:
        raise DomainError(f"kernel integral does not converge for A={A}, B={B}")
    return min(cutoffs)


def fractional_laplace(A: complex, B: complex, a: float, b: float, epsrel: float = 1e-10) -> Tuple[complex, float]:
    """
    Adaptive evaluation of K_b(A, B) = int_0^inf r^{b-1} exp(-r A - r^a B) dr for Re A >= 0, Re B >= 0.

    The contour is rotated to kill the oscillation of exp(-r A), then r = s^{1/a} removes the endpoint singularity and the finite range [0, s*] is integrated with QUADPACK (Gauss-Kronrod 21) on the real and imaginary parts separately.

    Args:
        A (complex): Linear coefficient, Re A >= 0.
        B (complex): Coefficient of r^a, Re B >= 0.
        a (float): Power in (0, 1).
        b (float): Power of the measure r^{b-1} dr, positive.
        epsrel (float): Requested relative accuracy.

    Returns:
        Tuple[complex, float]: Value and absolute error estimate.

    Raises:
        NumericalError: If the error estimate exceeds the requested accuracy by more than QUAD_FAILURE_FACTOR.
    """
    A = complex(A)
    B = complex(B)
    if A.real < -1e-14 or B.real < -1e-14:
        raise DomainError(f"kernel needs Re A >= 0 and Re B >= 0, got A={A}, B={B}")
    if A == 0:
        if B == 0:
            raise DomainError("kernel diverges for A = B = 0")
        return gamma_fn(b / a) / (a * B ** (b / a)), 0.0
    theta = _rotation(A, B, a)
    rotated_a = A * cmath.exp(1j * theta)
    rotated_b = B * cmath.exp(1j * a * theta)
    upper = _cutoff(rotated_a, rotated_b, a)
    power = b / a - 1.0
    inv_a = 1.0 / a

    def integrand(s: float) -> complex:
        if s <= 0.0:
            return complex(1.0 if power == 0.0 else 0.0)
        return s ** power * cmath.exp(-rotated_a * s ** inv_a - rotated_b * s)

    x, w = leggauss(48)
    nodes = 0.5 * (x + 1.0) * upper
    magnitude = abs(0.5 * upper * sum(wi * integrand(si) for si, wi in zip(nodes, w)))
    epsabs = 0.1 * epsrel * magnitude
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', IntegrationWarning)
        real, real_err = integrate.quad(lambda s: integrand(s).real, 0.0, upper, epsabs=epsabs, epsrel=epsrel, limit=QUAD_LIMIT)
        imag, imag_err = integrate.quad(lambda s: integrand(s).imag, 0.0, upper, epsabs=epsabs, epsrel=epsrel, limit=QUAD_LIMIT)
    raw = complex(real, imag)
    error = math.hypot(real_err, imag_err)
    tolerance = epsrel * abs(raw) + 1e-300
    if error > QUAD_FAILURE_FACTOR * max(tolerance, 1e-15 * abs(raw)):
        raise NumericalError(f"quadrature estimate {error:.3e} above tolerance for A={A}, B={B}",
                             {'estimate': error, 'value': [raw.real, raw.imag]})
    factor = cmath.exp(1j * b * theta) / a
    return factor * raw, abs(factor) * error


def fractional_laplace_fixed(A: np.ndarray, B: np.ndarray, a: float, b: float, nodes: int = 96) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized K_b(A, B) with a fixed Gauss-Legendre rule on the rotated, substituted range of each element. The error estimate is the difference with the half-size rule.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    shape = np.broadcast(A, B).shape
    A = np.broadcast_to(A, shape).ravel()
    B = np.broadcast_to(B, shape).ravel()
    values = np.empty(A.size, dtype=complex)
    errors = np.zeros(A.size)
    tiny = np.abs(A) < 1e-13
    if np.any(tiny):
        values[tiny] = gamma_fn(b / a) / (a * B[tiny] ** (b / a))
    live = ~tiny
    if np.any(live):
        A_live = A[live]
        B_live = B[live]
        target = -np.angle(A_live)
        arg_b = np.angle(B_live)
        margin = np.minimum(ARG_MARGIN, (np.pi / 2.0 - np.abs(arg_b)) / 2.0)
        theta = np.clip(target, (-np.pi / 2.0 + margin - arg_b) / a, (np.pi / 2.0 - margin - arg_b) / a)
        theta = np.where(B_live == 0, target, theta)
        rot_a = A_live * np.exp(1j * theta)
        rot_b = B_live * np.exp(1j * a * theta)
        with np.errstate(divide='ignore'):
            cut_a = np.where(rot_a.real > 0.0, (DECAY_LOG / rot_a.real) ** a, np.inf)
            cut_b = np.where(rot_b.real > 0.0, DECAY_LOG / rot_b.real, np.inf)
        upper = np.minimum(cut_a, cut_b)
        power = b / a - 1.0
        prefactor = np.exp(1j * b * theta) / a

        def rule(count: int) -> np.ndarray:
            x, w = leggauss(count)
            s = 0.5 * (x[None, :] + 1.0) * upper[:, None]
            integrand = s ** power * np.exp(-rot_a[:, None] * s ** (1.0 / a) - rot_b[:, None] * s)
            return prefactor * 0.5 * upper * (integrand @ w)

        fine = rule(nodes)
        coarse = rule(max(nodes // 2, 8))
        values[live] = fine
        errors[live] = np.abs(fine - coarse)
    return values.reshape(shape), errors.reshape(shape)
