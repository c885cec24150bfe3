import csv
import logging
import os
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import linalg
from scipy.special import gamma as gamma_fn

from ensemble.matrix import WignerLevyMatrix
from errors import DomainError, NumericalError, ParameterError
from limitlaw.cone import bilinear, check_quarter_circle
from logger import LOGGER_NAME


def _check_upper(z: complex) -> complex:
    z = complex(z)
    if not z.imag > 0.0:
        raise DomainError(f"resolvent requires Im z > 0, got {z}", {'z': [z.real, z.imag]})
    return z


def _check_kappa(kappa: float) -> float:
    if not 0.0 < kappa <= 1.0:
        raise ParameterError(f"kappa must lie in (0, 1], got {kappa}", {'kappa': kappa})
    return float(kappa)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """
    Eigendecomposition of one scaled matrix A = X / a_n.

    Eigenvalues are stored ascending; column k of `eigenvectors` belongs to eigenvalue k. The descending order lambda_1 >= ... >= lambda_n is available through `descending()`.

    Attributes:
        eigenvalues (np.ndarray): Sorted ascending eigenvalues.
        eigenvectors (np.ndarray): Orthonormal eigenvector columns.
        seed (int): Seed of the matrix the data came from, -1 when built from an explicit matrix.
    """
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    seed: int = -1

    @classmethod
    def from_symmetric(cls, matrix: np.ndarray, seed: int = -1) -> 'SpectralData':
        try:
            eigenvalues, eigenvectors = linalg.eigh(matrix, driver='evd')
        except (linalg.LinAlgError, ValueError) as ex:
            logging.getLogger(LOGGER_NAME).warning(f"Divide-and-conquer eigensolver failed for seed {seed} ({ex}), retrying with the default driver")
            try:
                eigenvalues, eigenvectors = linalg.eigh(matrix)
            except (linalg.LinAlgError, ValueError) as retry_ex:
                raise NumericalError(f"symmetric eigensolver failed: {retry_ex}", {'seed': seed})
        if not (np.all(np.isfinite(eigenvalues)) and np.all(np.isfinite(eigenvectors))):
            raise NumericalError("symmetric eigensolver returned non-finite values", {'seed': seed})
        eigenvalues.setflags(write=False)
        eigenvectors.setflags(write=False)
        return cls(eigenvalues=eigenvalues, eigenvectors=eigenvectors, seed=seed)

    @property
    def n(self) -> int:
        return int(self.eigenvalues.size)

    def descending(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.eigenvalues[::-1], self.eigenvectors[:, ::-1]

    def interval_count(self, a: float, b: float) -> int:
        """N_I = number of eigenvalues in the closed interval [a, b]."""
        if a > b:
            raise ParameterError(f"interval endpoints must satisfy a <= b, got [{a}, {b}]")
        lower = np.searchsorted(self.eigenvalues, a, side='left')
        upper = np.searchsorted(self.eigenvalues, b, side='right')
        return int(upper - lower)

    def window_indices(self, a: float, b: float) -> np.ndarray:
        lower = np.searchsorted(self.eigenvalues, a, side='left')
        upper = np.searchsorted(self.eigenvalues, b, side='right')
        return np.arange(lower, upper)

    def stieltjes(self, z: complex) -> complex:
        z = _check_upper(z)
        return complex(np.mean(1.0 / (self.eigenvalues - z)))

    def resolvent_diag(self, z: complex) -> np.ndarray:
        """R_kk(z) = sum_i v_i(k)^2 / (lambda_i - z) for every k."""
        z = _check_upper(z)
        return (self.eigenvectors ** 2) @ (1.0 / (self.eigenvalues - z))

    def trace_resolvent_square(self, z: complex) -> float:
        """tr R R* = sum_j |lambda_j - z|^{-2}."""
        z = _check_upper(z)
        return float(np.sum(1.0 / np.abs(self.eigenvalues - z) ** 2))

    def empirical_frac_moment(self, z: complex, u: complex, kappa: float) -> complex:
        """
        Gamma(1 - kappa) (1/n) sum_k ((-i R_kk) . u)^kappa. At kappa = 1 the Gamma prefactor diverges and is omitted, leaving the plain mean of (-i R_kk) . u.
        """
        u = check_quarter_circle(u)
        kappa = _check_kappa(kappa)
        h = -1j * self.resolvent_diag(z)
        moment = np.mean(bilinear(h, u) ** kappa)
        prefactor = 1.0 if kappa == 1.0 else gamma_fn(1.0 - kappa)
        return complex(prefactor * moment)

    def frac_moment_imag(self, z: complex, kappa: float) -> float:
        kappa = _check_kappa(kappa)
        return float(np.mean(self.resolvent_diag(z).imag ** kappa))

    def dump_csv(self, path: str) -> None:
        """Writes the eigenvalues with 17 significant digits and as hexfloats."""
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as file:
            writer = csv.writer(file)
            writer.writerow(['seed', 'index', 'eigenvalue', 'eigenvalue_hex'])
            for index, value in enumerate(self.eigenvalues):
                writer.writerow([self.seed, index, f"{value:.17g}", float(value).hex()])
        logging.getLogger(LOGGER_NAME).debug(f"Eigenvalues of seed {self.seed} written to {path}")


def spectrum(matrix: WignerLevyMatrix) -> SpectralData:
    """Full eigendecomposition of the scaled matrix A = X / n^{1/alpha}."""
    return SpectralData.from_symmetric(matrix.scaled(), seed=matrix.seed)


def eigenvalues(matrix: WignerLevyMatrix) -> np.ndarray:
    """Ascending eigenvalues of the scaled matrix, without eigenvectors."""
    try:
        values = linalg.eigvalsh(matrix.scaled(), driver='evd')
    except (linalg.LinAlgError, ValueError) as ex:
        raise NumericalError(f"symmetric eigensolver failed: {ex}", {'seed': matrix.seed})
    return values
