import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.special import gamma as gamma_fn

from errors import DomainError, ParameterError
from limitlaw.cone import in_cone
from limitlaw.kernel import fractional_laplace_fixed
from logger import LOGGER_NAME
from rde.population import ResolventPool, frac_moment_terms
from stable import check_alpha

CONE_SLACK = 1e-9
DIAGONAL_WINDOW = 1e-3
MIN_GRID_POINTS = 8


def c_alpha(alpha: float) -> float:
    """alpha / (2^{alpha/2} Gamma(alpha/2)^2 Gamma(1 - alpha/2))."""
    a = alpha / 2.0
    return alpha / (2.0 ** a * gamma_fn(a) ** 2 * gamma_fn(1.0 - a))


def fixed_point_constant(alpha: float) -> float:
    """
    Constant in front of F_{-iz} for which gamma_z is a fixed point when gamma_z carries its Gamma(1 - alpha/2) factor, i.e. c_alpha Gamma(1 - alpha/2).
    """
    return c_alpha(alpha) * gamma_fn(1.0 - alpha / 2.0)


def quarter_circle_angles(points: int) -> np.ndarray:
    if points < 2:
        raise ParameterError(f"grid needs at least 2 points, got {points}")
    return np.linspace(0.0, math.pi / 2.0, int(points))


def diagonal_weight(angles: np.ndarray) -> np.ndarray:
    """|i.u| = |cos(theta) - sin(theta)| for u = e^{i theta}."""
    return np.abs(np.cos(angles) - np.sin(angles))


@dataclass(frozen=True, eq=False)
class GammaGrid:
    """
    Values of an (alpha/2)-homogeneous function on M points of the quarter circle.

    Attributes:
        angles (np.ndarray): Increasing angles in [0, pi/2].
        values (np.ndarray): Complex values; in K_{alpha/2} unless the grid is a difference of grids.
        alpha (float): Stable index.
        flags (np.ndarray): True where the value failed its quadrature tolerance.
        errors (np.ndarray): Quadrature error estimates, zero for Monte Carlo grids.
        difference (bool): True for a difference of two grids, which is not cone-valued.
    """
    angles: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    alpha: float
    flags: Optional[np.ndarray] = field(default=None, repr=False)
    errors: Optional[np.ndarray] = field(default=None, repr=False)
    difference: bool = False

    def __post_init__(self) -> None:
        angles = np.asarray(self.angles, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if angles.ndim != 1 or angles.shape != values.shape:
            raise ParameterError(f"angles and values must be matching vectors, got {angles.shape} and {values.shape}")
        if np.any(np.diff(angles) <= 0.0) or angles[0] < 0.0 or angles[-1] > math.pi / 2.0 + 1e-12:
            raise DomainError("grid angles must increase inside [0, pi/2]")
        flags = np.zeros(angles.size, dtype=bool) if self.flags is None else np.asarray(self.flags, dtype=bool)
        errors = np.zeros(angles.size) if self.errors is None else np.asarray(self.errors, dtype=float)
        if not self.difference:
            outside = ~in_cone(values, self.alpha / 2.0, CONE_SLACK) & ~flags
            if np.any(outside):
                raise DomainError(f"{int(outside.sum())} grid values lie outside K_{self.alpha / 2.0}",
                                  {'angles': angles[outside].tolist()})
        object.__setattr__(self, 'angles', angles)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'flags', flags)
        object.__setattr__(self, 'errors', errors)

    @classmethod
    def from_pool(cls, pool: ResolventPool, points: int = 33) -> 'GammaGrid':
        """gamma_z(u) = Gamma(1 - alpha/2) mean((-iR).u)^{alpha/2} from a population."""
        angles = quarter_circle_angles(points)
        prefactor = gamma_fn(1.0 - pool.alpha / 2.0)
        values = np.array([prefactor * np.mean(frac_moment_terms(pool.samples, complex(math.cos(t), math.sin(t)), pool.alpha / 2.0))
                           for t in angles])
        values = np.where(in_cone(values, pool.alpha / 2.0), values, _project_to_cone(values, pool.alpha / 2.0))
        return cls(angles=angles, values=values, alpha=pool.alpha)

    @classmethod
    def from_function(cls, alpha: float, points: int, function) -> 'GammaGrid':
        angles = quarter_circle_angles(points)
        return cls(angles=angles, values=np.array([function(t) for t in angles], dtype=complex), alpha=alpha)

    @property
    def size(self) -> int:
        return int(self.angles.size)

    def scaled(self, factor: float) -> 'GammaGrid':
        return GammaGrid(self.angles, factor * self.values, self.alpha, self.flags, self.errors,
                         difference=self.difference or factor < 0.0)

    def minus(self, other: 'GammaGrid') -> 'GammaGrid':
        if not np.array_equal(self.angles, other.angles):
            raise ParameterError("grids must share their angles")
        return GammaGrid(self.angles, self.values - other.values, self.alpha, self.flags | other.flags,
                         self.errors + other.errors, difference=True)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def interpolator(self) -> 'HomogeneousExtension':
        return HomogeneousExtension(self)


class HomogeneousExtension:
    """g(w) = |w|^{alpha/2} g(e^{i arg w}) on the closed first quadrant, with cubic splines in the angle."""

    def __init__(self, grid: GammaGrid) -> None:
        self.a = grid.alpha / 2.0
        self._real = CubicSpline(grid.angles, grid.values.real)
        self._imag = CubicSpline(grid.angles, grid.values.imag)
        self._upper = float(grid.angles[-1])

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        angle = np.clip(np.angle(w), 0.0, self._upper)
        return np.abs(w) ** self.a * (self._real(angle) + 1j * self._imag(angle))


def _project_to_cone(values: np.ndarray, index: float) -> np.ndarray:
    limit = math.pi * index / 2.0
    angle = np.clip(np.angle(values), -limit, limit)
    return np.abs(values) * np.exp(1j * angle)


@dataclass(frozen=True)
class GOperatorConfig:
    """
    Quadrature sizes of the discrete G_z operator.

    Attributes:
        n_theta (int): Gauss-Legendre nodes on each half [0, pi/4] and [pi/4, pi/2] of the angle integral.
        n_y (int): Nodes on each of [0, T] and [T, inf) of the y integral.
        n_r (int): Nodes of the inner r integral.
        tolerance (float): Relative difference with the half-size rule above which a grid point is flagged.
        workers (int): Threads evaluating grid points.
    """
    n_theta: int = 48
    n_y: int = 48
    n_r: int = 64
    tolerance: float = 1e-2
    workers: int = 4

    @classmethod
    def from_config(cls, config: Optional[Dict[str, Any]]) -> 'GOperatorConfig':
        config = config or {}
        known = {name: config[name] for name in cls.__dataclass_fields__ if name in config}
        return cls(**known)

    def halved(self) -> 'GOperatorConfig':
        return GOperatorConfig(max(self.n_theta // 2, 4), max(self.n_y // 2, 4), max(self.n_r // 2, 8), self.tolerance, self.workers)


def _theta_rule(a: float, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for int_0^{pi/2} (sin 2 theta)^{a-1} f(theta) d theta, theta = (pi/4) s^{1/a} on each half."""
    x, w = leggauss(nodes)
    s = 0.5 * (x + 1.0)
    theta = (math.pi / 4.0) * s ** (1.0 / a)
    jacobian = (math.pi / 4.0) / a * s ** (1.0 / a - 1.0)
    weight = 0.5 * w * np.sin(2.0 * theta) ** (a - 1.0) * jacobian
    return np.concatenate([theta, math.pi / 2.0 - theta]), np.concatenate([weight, weight])


def _y_rule(a: float, split: float, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for int_0^inf y^{-a-1} f(y) dy split at T, absorbing the singular weight on both pieces."""
    x, w = leggauss(nodes)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    inner = split * s ** (1.0 / (1.0 - a))
    inner_weight = w * split ** (-a) / (1.0 - a) * s ** (-1.0 / (1.0 - a))
    outer = split * s ** (-1.0 / a)
    outer_weight = w * split ** (-a) / a
    return np.concatenate([inner, outer]), np.concatenate([inner_weight, outer_weight])


def _apply_at(extension: HomogeneousExtension, h: complex, v: complex, a: float, cfg: GOperatorConfig) -> complex:
    """F_h(g)(v) by the (theta, y, r) product rule."""
    thetas, theta_weights = _theta_rule(a, cfg.n_theta)
    total = 0j
    for theta, theta_weight in zip(thetas, theta_weights):
        e_theta = complex(math.cos(theta), math.sin(theta))
        split = abs(math.cos(theta) - math.sin(theta)) / 2.0
        if split == 0.0:
            continue
        base_a = e_theta.real * h + e_theta.imag * h.conjugate()
        base, _ = fractional_laplace_fixed(base_a, extension(e_theta), a, a, cfg.n_r)
        ys, y_weights = _y_rule(a, split, cfg.n_y)
        points = e_theta + ys * v
        shifted_a = points.real * h + points.imag * h.conjugate()
        shifted, _ = fractional_laplace_fixed(shifted_a, extension(points), a, a, cfg.n_r)
        total += theta_weight * np.sum(y_weights * (base - shifted))
    return complex(total)


def apply_G_operator(grid: GammaGrid, z: complex, cfg: Optional[GOperatorConfig] = None) -> GammaGrid:
    """
    G_z(g)(u) = C F_{-iz}(g)(u_check), u_check = Im u + i Re u, on every grid angle.

    Each grid point is evaluated twice, with the configured rule and with the half-size rule; points whose two values differ by more than the relative tolerance are flagged, and points falling outside K_{alpha/2} are flagged as well.

    Raises:
        ParameterError: For alpha >= 1.
        DomainError: For Im z < 0 or z = 0.
    """
    cfg = cfg or GOperatorConfig()
    alpha = check_alpha(grid.alpha, upper=1.0)
    z = complex(z)
    if z.imag < 0.0 or z == 0:
        raise DomainError(f"G operator needs z in the closed upper half plane minus 0, got {z}", {'z': [z.real, z.imag]})
    logger = logging.getLogger(LOGGER_NAME)
    a = alpha / 2.0
    h = -1j * z
    extension = grid.interpolator()
    coarse_cfg = cfg.halved()
    constant = fixed_point_constant(alpha)

    def evaluate(angle: float) -> Tuple[complex, float]:
        v = complex(math.sin(angle), math.cos(angle))
        fine = _apply_at(extension, h, v, a, cfg)
        coarse = _apply_at(extension, h, v, a, coarse_cfg)
        return constant * fine, constant * abs(fine - coarse)

    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as executor:
        results = list(executor.map(evaluate, grid.angles))
    values = np.array([value for value, _ in results])
    errors = np.array([error for _, error in results])
    flags = errors > cfg.tolerance * np.maximum(np.abs(values), 1e-300)
    flags |= ~in_cone(values, a, CONE_SLACK)
    if np.any(flags):
        logger.warning(f"G operator at z={z}: {int(flags.sum())} of {values.size} grid points above tolerance or outside the cone")
    return GammaGrid(angles=grid.angles, values=values, alpha=alpha, flags=flags, errors=errors)


def norm_beta_eps(grid: GammaGrid, beta: float, eps: float = 0.0, variant: str = 'beta_eps') -> float:
    """
    Discrete ||g||_{beta,eps} (variant 'beta_eps') or ||g||_beta (variant 'beta') over the grid.

    The sup term is max |g(u)| |i.u|^eps for 'beta_eps' and max |g(u)| for 'beta'. The Hoelder term is the largest quotient |g(u) - g(v)| / |u - v|^beta weighted by min(|i.u|, |i.v|)^{beta + eps} ('beta_eps') or ^{beta - alpha/2} ('beta'), over pairs of points outside a window of width 1e-3 around pi/4.

    Raises:
        ParameterError: For fewer than 8 points, beta outside [alpha/2, 1], eps < 0 or an unknown variant.
    """
    if grid.size < MIN_GRID_POINTS:
        raise ParameterError(f"norm needs at least {MIN_GRID_POINTS} grid points, got {grid.size}")
    a = grid.alpha / 2.0
    if not a - 1e-12 <= beta <= 1.0:
        raise ParameterError(f"beta must lie in [{a}, 1], got {beta}", {'beta': beta})
    if eps < 0.0:
        raise ParameterError(f"eps must be non-negative, got {eps}", {'eps': eps})
    if variant not in ('beta', 'beta_eps'):
        raise ParameterError(f"unknown norm variant {variant}")
    weight = diagonal_weight(grid.angles)
    magnitude = np.abs(grid.values)
    sup = float(np.max(magnitude * weight ** eps)) if variant == 'beta_eps' else float(np.max(magnitude))
    keep = np.abs(grid.angles - math.pi / 4.0) > DIAGONAL_WINDOW / 2.0
    angles = grid.angles[keep]
    values = grid.values[keep]
    weights = weight[keep]
    if angles.size < 2:
        return sup
    points = np.exp(1j * angles)
    distance = np.abs(points[:, None] - points[None, :])
    np.fill_diagonal(distance, np.inf)
    exponent = beta + eps if variant == 'beta_eps' else beta - a
    pair_weight = np.minimum(weights[:, None], weights[None, :]) ** exponent
    quotient = np.abs(values[:, None] - values[None, :]) / distance ** beta * pair_weight
    return sup + float(np.max(quotient))


@dataclass(frozen=True)
class ContractionMeasure:
    z: complex
    input_distance: float
    output_distance: float
    flagged_points: int

    @property
    def factor(self) -> float:
        return self.output_distance / self.input_distance if self.input_distance > 0.0 else math.nan


def measure_contraction(first: GammaGrid, second: GammaGrid, z: complex, beta: float, eps: float,
                        cfg: Optional[GOperatorConfig] = None) -> ContractionMeasure:
    """||G_z f - G_z g||_{beta,eps} / ||f - g||_{beta,eps} for two grids on the same angles."""
    before = norm_beta_eps(first.minus(second), beta, eps)
    image_first = apply_G_operator(first, z, cfg)
    image_second = apply_G_operator(second, z, cfg)
    after = norm_beta_eps(image_first.minus(image_second), beta, eps)
    flagged = int(np.sum(image_first.flags | image_second.flags))
    return ContractionMeasure(z=complex(z), input_distance=before, output_distance=after, flagged_points=flagged)
