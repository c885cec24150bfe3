import cmath
import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from errors import ConvergenceError, DomainError, NumericalError
from limitlaw.cone import ConeValue, in_cone, principal_power
from limitlaw.transforms import phi, psi
from logger import LOGGER_NAME
from stable import check_alpha

STATUS_OK = 'ok'
STATUS_EXCEPTIONAL = 'suspected_exceptional'


@dataclass(frozen=True)
class SolverOptions:
    """
    Numerical constants of the fixed-point solver.

    Attributes:
        tolerance (float): Stop once |phi(y) - y| falls below this value.
        residual_limit (float): Largest residual accepted on success.
        max_iter (int): Iteration budget of one Picard/Steffensen solve.
        stagnation_window (int): Iterations without improvement that count as non-contraction.
        epsrel (float): Relative accuracy requested from the quadrature.
        tau (float): Initial continuation step factor, step = tau min(1, eta)^2.
        min_step (float): Continuation step below which a point is reported as suspected exceptional.
        contraction_factor (float): Largest Picard contraction factor accepted when locating E0.
        contraction_iterations (int): Picard steps used to measure the contraction factor.
        ray_angle (float): Argument of the test ray z = r e^{i ray_angle}.
        radius_min (float): Smallest radius of the test ray.
        radius_max (float): Largest radius of the test ray.
        radius_points (int): Number of radii on the test ray.
        singular_distance (float): Distance to a known singular point that flags a result.
    """
    tolerance: float = 1e-11
    residual_limit: float = 1e-9
    max_iter: int = 10000
    stagnation_window: int = 200
    epsrel: float = 1e-10
    tau: float = 0.25
    min_step: float = 1e-8
    contraction_factor: float = 0.9
    contraction_iterations: int = 20
    ray_angle: float = math.pi / 4.0
    radius_min: float = 0.25
    radius_max: float = 100.0
    radius_points: int = 32
    singular_distance: float = 1e-3

    @classmethod
    def from_config(cls, config: Optional[Dict[str, Any]]) -> 'SolverOptions':
        config = config or {}
        known = {name: config[name] for name in cls.__dataclass_fields__ if name in config}
        return cls(**known)


@dataclass(frozen=True)
class LimitPoint:
    """
    Solved pair (y(z), g(z)) at one point z of the upper half plane.

    Attributes:
        z (complex): Target point.
        y (complex): Fixed point y = phi_{alpha,z}(y) in K_{alpha/2}.
        g (complex): Stieltjes transform i psi_{alpha,z}(y).
        residual (float): |y - phi_{alpha,z}(y)|.
        path_length (int): Continuation steps used.
        iterations (int): Map evaluations of the final solve.
        status (str): 'ok' or 'suspected_exceptional'.
        flagged (bool): True when z is close to a known singular point.
    """
    z: complex
    y: complex
    g: complex
    residual: float
    path_length: int = 0
    iterations: int = 0
    status: str = STATUS_OK
    flagged: bool = False

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def cone_value(self, alpha: float) -> ConeValue:
        return ConeValue(self.y, alpha / 2.0)

    def density(self) -> float:
        return self.g.imag / math.pi


@dataclass
class FixedPointSolver:
    """
    Solver of y = phi_{alpha,z}(y) and of g = i psi_{alpha,z}(y).

    For |z| at least the contraction threshold E0 a Picard iteration from (-iz)^{-alpha/2}, accelerated by Steffensen's Delta^2 step, converges directly. Below E0 the point is reached by continuation: first solved at Re z + i(E0 + 1), then followed downward in eta with adaptive steps. E0 is detected once per solver on a test ray and cached.

    Attributes:
        alpha (float): Stable index in (0, 2).
        options (SolverOptions): Numerical constants.
    """
    alpha: float
    options: SolverOptions = field(default_factory=SolverOptions)
    _threshold: Optional[float] = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self) -> None:
        self.alpha = check_alpha(self.alpha)
        self.logger: logging.Logger = logging.getLogger(LOGGER_NAME)

    @property
    def a(self) -> float:
        return self.alpha / 2.0

    def phi(self, z: complex, y: complex) -> complex:
        return phi(self.alpha, z, y, self.options.epsrel)

    def psi(self, z: complex, y: complex) -> complex:
        return psi(self.alpha, z, y, self.options.epsrel)

    def initial_guess(self, z: complex) -> complex:
        return principal_power(-1j * complex(z), -self.a)

    def contraction_factor(self, z: complex) -> float:
        """Average Picard contraction factor over the configured number of steps from the initial guess."""
        y_prev = self.initial_guess(z)
        y = self.phi(z, y_prev)
        first = abs(y - y_prev)
        if first == 0.0:
            return 0.0
        last = first
        steps = 1
        for _ in range(self.options.contraction_iterations - 1):
            y_prev, y = y, self.phi(z, y)
            last = abs(y - y_prev)
            steps += 1
            if last < 1e-15:
                return 0.0
        return (last / first) ** (1.0 / (steps - 1))

    def contraction_threshold(self) -> float:
        """
        Smallest radius r on the test ray such that the Picard map contracts with factor below the configured bound at every radius >= r.
        """
        with self._lock:
            if self._threshold is not None:
                return self._threshold
            opts = self.options
            radii = np.geomspace(opts.radius_min, opts.radius_max, opts.radius_points)[::-1]
            threshold = float(radii[0])
            for radius in radii:
                z = radius * cmath.exp(1j * opts.ray_angle)
                try:
                    factor = self.contraction_factor(z)
                except NumericalError:
                    break
                if factor >= opts.contraction_factor:
                    break
                threshold = float(radius)
            else:
                threshold = float(radii[-1])
            if threshold >= opts.radius_max:
                self.logger.warning(f"No contraction detected on the test ray for alpha={self.alpha}, using E0={threshold}")
            self.logger.debug(f"Contraction threshold E0={threshold:.4g} for alpha={self.alpha}")
            self._threshold = threshold
            return threshold

    def iterate(self, z: complex, y0: complex) -> tuple:
        """
        Picard iteration with Steffensen acceleration from y0.

        Returns:
            tuple: (y, residual, evaluations).

        Raises:
            ConvergenceError: When the residual stagnates or the iteration budget is exhausted.
        """
        opts = self.options
        y = complex(y0)
        best = math.inf
        best_at = 0
        evaluations = 0
        for iteration in range(opts.max_iter):
            p1 = self.phi(z, y)
            evaluations += 1
            step = abs(p1 - y)
            if step < opts.tolerance:
                residual = abs(self.phi(z, p1) - p1)
                evaluations += 1
                return p1, residual, evaluations
            if step < best:
                best, best_at = step, iteration
            elif iteration - best_at > opts.stagnation_window:
                break
            p2 = self.phi(z, p1)
            evaluations += 1
            denominator = p2 - 2.0 * p1 + y
            candidate = p2
            if abs(denominator) > 1e-300:
                accelerated = y - (p1 - y) ** 2 / denominator
                if cmath.isfinite(accelerated) and in_cone(accelerated, self.a, 1e-9):
                    candidate = accelerated
            y = candidate
        raise ConvergenceError(f"fixed point not reached at z={z}, last step {best:.3e}",
                               {'z': [z.real, z.imag], 'last_iterate': [y.real, y.imag], 'residual': best})

    def _finish(self, z: complex, y: complex, residual: float, path: int, evaluations: int,
                singular_points: Sequence[complex]) -> LimitPoint:
        g = 1j * self.psi(z, y)
        if g.imag < -1e-12:
            raise NumericalError(f"negative Im g={g.imag:.3e} at z={z}", {'z': [z.real, z.imag]})
        flagged = any(abs(z - p) < self.options.singular_distance for p in singular_points)
        if residual > self.options.residual_limit:
            raise ConvergenceError(f"residual {residual:.3e} above limit at z={z}", {'z': [z.real, z.imag], 'last_iterate': [y.real, y.imag]})
        return LimitPoint(z=z, y=y, g=g, residual=residual, path_length=path, iterations=evaluations, flagged=flagged)

    def solve(self, z: complex, y_start: Optional[complex] = None, singular_points: Sequence[complex] = ()) -> LimitPoint:
        """
        Solves the fixed point at z (Im z > 0).

        Args:
            z (complex): Target point.
            y_start (Optional[complex]): Warm start, for instance the solution at a neighbouring point. When the warm start fails the regular path is used.
            singular_points (Sequence[complex]): Known singular points; results within the configured distance are flagged.

        Returns:
            LimitPoint: Converged point, or a point with status 'suspected_exceptional' when continuation keeps failing.
        """
        z = complex(z)
        if not z.imag > 0.0:
            raise DomainError(f"solve_fixed_point needs Im z > 0, got {z}", {'z': [z.real, z.imag]})
        if y_start is not None:
            try:
                y, residual, evaluations = self.iterate(z, y_start)
                return self._finish(z, y, residual, 0, evaluations, singular_points)
            except ConvergenceError:
                self.logger.debug(f"Warm start failed at z={z}, using the regular path")
        threshold = self.contraction_threshold()
        top = threshold + 1.0
        if abs(z) >= threshold or z.imag >= top:
            y, residual, evaluations = self.iterate(z, self.initial_guess(z))
            return self._finish(z, y, residual, 0, evaluations, singular_points)
        return self._continue_down(z, top, singular_points)

    def _continue_down(self, z: complex, top: float, singular_points: Sequence[complex]) -> LimitPoint:
        energy, target = z.real, z.imag
        start = complex(energy, top)
        y, residual, evaluations = self.iterate(start, self.initial_guess(start))
        eta = top
        step = self.options.tau * min(1.0, eta) ** 2
        path = 0
        while eta > target:
            eta_next = max(target, eta - step)
            try:
                y, residual, evaluations = self.iterate(complex(energy, eta_next), y)
            except (ConvergenceError, NumericalError):
                step /= 2.0
                if step < self.options.min_step:
                    self.logger.warning(f"Continuation stalled at E={energy}, eta={eta:.3e}: suspected exceptional point")
                    return LimitPoint(z=z, y=y, g=complex('nan'), residual=math.inf, path_length=path,
                                      iterations=evaluations, status=STATUS_EXCEPTIONAL, flagged=True)
                continue
            eta = eta_next
            path += 1
            step = min(2.0 * step, max(eta / 2.0, self.options.min_step))
        return self._finish(z, y, residual, path, evaluations, singular_points)
