import bisect
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.integrate import IntegrationWarning

from errors import ConvergenceError, ParameterError
from limitlaw.solver import FixedPointSolver, LimitPoint
from logger import LOGGER_NAME

ETA_MIN = 1e-4
EXTRAPOLATION_POINTS = 3


@dataclass(frozen=True)
class DensityEstimate:
    """
    (1/pi) Im g(E + i eta) along a decreasing eta sequence and its linear extrapolation to eta = 0 over the last three heights.
    """
    energy: float
    etas: Tuple[float, ...]
    values: Tuple[float, ...]
    extrapolated: float
    residual: float
    monotone: bool
    status: str = 'ok'

    @property
    def f_estimate(self) -> float:
        return self.values[-1]


@dataclass(frozen=True)
class IntervalMass:
    """Deconvolution estimate of mu_alpha([a, b]) with its attached error bound."""
    a: float
    b: float
    eta: float
    mass: float
    error_bound: float
    sup_im_g: float
    skipped: bool = False


def _check_etas(eta_sequence: Sequence[float]) -> List[float]:
    etas = [float(eta) for eta in eta_sequence]
    if not etas:
        raise ParameterError("eta sequence is empty")
    if any(later >= earlier for earlier, later in zip(etas, etas[1:])):
        raise ParameterError(f"eta sequence must be strictly decreasing, got {etas}", {'eta_list': etas})
    if etas[-1] < ETA_MIN:
        raise ParameterError(f"smallest eta must be at least {ETA_MIN}, got {etas[-1]}", {'eta_list': etas})
    return etas


def _extrapolate(etas: Sequence[float], values: Sequence[float]) -> float:
    if len(etas) < 2:
        return max(values[-1], 0.0)
    count = min(EXTRAPOLATION_POINTS, len(etas))
    slope, intercept = np.polyfit(etas[-count:], values[-count:], 1)
    return max(float(intercept), 0.0)


def _is_monotone(values: Sequence[float]) -> bool:
    steps = np.diff(values)
    return bool(np.all(steps >= -1e-12) or np.all(steps <= 1e-12))


def limit_density(solver: FixedPointSolver, energy: float, eta_sequence: Sequence[float],
                  y_start: Optional[complex] = None) -> Tuple[DensityEstimate, Optional[complex]]:
    """
    Estimates f_alpha(E) from the decreasing eta sequence, warm-starting every height from the previous one.

    Returns:
        Tuple[DensityEstimate, Optional[complex]]: The estimate and the fixed point at the largest eta, which can warm-start a neighbouring energy.
    """
    etas = _check_etas(eta_sequence)
    logger = logging.getLogger(LOGGER_NAME)
    values: List[float] = []
    residual = 0.0
    y = y_start
    y_top = None
    for index, eta in enumerate(etas):
        point = solver.solve(complex(energy, eta), y_start=y)
        if not point.ok:
            return DensityEstimate(energy=energy, etas=tuple(etas[:index]), values=tuple(values) or (math.nan,),
                                   extrapolated=math.nan, residual=math.inf, monotone=False, status=point.status), y_top
        if index == 0:
            y_top = point.y
        y = point.y
        values.append(max(point.density(), 0.0))
        residual = max(residual, point.residual)
    monotone = _is_monotone(values)
    if not monotone:
        logger.warning(f"Non-monotone density sequence at E={energy}: {values}")
    estimate = DensityEstimate(energy=energy, etas=tuple(etas), values=tuple(values),
                               extrapolated=_extrapolate(etas, values), residual=residual, monotone=monotone)
    return estimate, y_top


def density_grid(solver: FixedPointSolver, energies: Sequence[float], eta_sequence: Sequence[float]) -> List[DensityEstimate]:
    """limit_density on a grid of energies, sweeping E with warm starts at the largest eta."""
    estimates = []
    warm = None
    for energy in energies:
        estimate, top = limit_density(solver, float(energy), eta_sequence, y_start=warm)
        warm = top
        estimates.append(estimate)
    return estimates


@dataclass
class StieltjesCurve:
    """
    Memo of solved points along a horizontal line Im z = eta; each new energy is warm-started from the nearest solved one.
    """
    solver: FixedPointSolver
    eta: float
    _energies: List[float] = field(default_factory=list, init=False)
    _points: Dict[float, LimitPoint] = field(default_factory=dict, init=False)
    exceptional: List[float] = field(default_factory=list, init=False)

    def point(self, energy: float) -> LimitPoint:
        energy = float(energy)
        if energy in self._points:
            return self._points[energy]
        warm = None
        if self._energies:
            index = bisect.bisect_left(self._energies, energy)
            neighbours = [self._energies[i] for i in (index - 1, index) if 0 <= i < len(self._energies)]
            nearest = min(neighbours, key=lambda e: abs(e - energy))
            if self._points[nearest].ok:
                warm = self._points[nearest].y
        point = self.solver.solve(complex(energy, self.eta), y_start=warm)
        if not point.ok:
            self.exceptional.append(energy)
        bisect.insort(self._energies, energy)
        self._points[energy] = point
        return point

    def im_g(self, energy: float) -> float:
        point = self.point(energy)
        if not point.ok:
            raise ConvergenceError(f"suspected exceptional point at E={energy}", {'energy': energy})
        return point.g.imag


def interval_mass_from_stieltjes(solver: FixedPointSolver, a: float, b: float, eta: float,
                                 curve: Optional[StieltjesCurve] = None, epsrel: float = 1e-7) -> IntervalMass:
    """
    mu_alpha([a, b]) estimated by (1/pi) int_a^b Im g(E + i eta) dE, with the error bound L eta log(1 + |I|/eta) where L is the largest Im g met by the quadrature.

    Raises:
        ParameterError: If |I| < eta.
    """
    if b - a < eta:
        raise ParameterError(f"interval length {b - a} is shorter than eta={eta}", {'a': a, 'b': b, 'eta': eta})
    curve = curve or StieltjesCurve(solver, eta)
    sup_im = [0.0]

    def integrand(energy: float) -> float:
        value = curve.im_g(energy)
        sup_im[0] = max(sup_im[0], value)
        return value / math.pi

    points = [0.0] if a < 0.0 < b else None
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', IntegrationWarning)
        mass, _ = integrate.quad(integrand, a, b, points=points, epsabs=1e-10, epsrel=epsrel, limit=200)
    bound = max(sup_im[0], 1.0) * eta * math.log(1.0 + (b - a) / eta)
    return IntervalMass(a=a, b=b, eta=eta, mass=float(mass), error_bound=float(bound), sup_im_g=float(sup_im[0]))


def total_mass(solver: FixedPointSolver, half_width: float, eta: float) -> float:
    """Mass of [-B, B] by deconvolution plus the analytic tail 2 int_B^inf (alpha/2) x^{-1-alpha} dx = B^{-alpha}."""
    curve = StieltjesCurve(solver, eta)
    half = interval_mass_from_stieltjes(solver, 0.0, half_width, eta, curve=curve)
    return 2.0 * half.mass + half_width ** (-solver.alpha)
