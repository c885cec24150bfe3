import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np

from ensemble.matrix import WignerLevyMatrix
from ensemble.spectrum import SpectralData, _check_upper
from errors import NumericalError, ParameterError
from logger import LOGGER_NAME


@dataclass(frozen=True, eq=False)
class MinorSpectrum:
    """Spectrum of the principal minor A^{(k)} together with the removed unscaled row X_k."""
    k: int
    spectral: SpectralData = field(repr=False)
    row: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class EsyBound:
    """Value of 4 eta^2 a_n^2 sum_k dist(X_k, W^(k))^{-2} and the per-minor diagnostics."""
    value: float
    count: int
    minors_used: int
    degenerate_minors: int


def minor_spectra(matrix: WignerLevyMatrix, ks: Optional[Iterable[int]] = None) -> List[MinorSpectrum]:
    """
    Diagonalizes the principal minors A^{(k)} for the requested k (all of them by default). Each minor costs one dense eigendecomposition, so callers working at larger n pass a subsample.
    """
    indices = range(matrix.n) if ks is None else ks
    minors = []
    for k in indices:
        if not 0 <= k < matrix.n:
            raise ParameterError(f"minor index {k} out of range for n={matrix.n}")
        minors.append(MinorSpectrum(k=int(k), spectral=SpectralData.from_symmetric(matrix.minor(k), seed=matrix.seed),
                                    row=matrix.row_without_diagonal(k)))
    return minors


def esy_counting_bound(matrix: WignerLevyMatrix, minors: List[MinorSpectrum], energy: float, eta: float) -> EsyBound:
    """
    Geometric upper bound N_I <= 4 eta^2 a_n^2 sum_k dist(X_k, W^(k))^{-2} for I = [E - eta, E + eta].

    W^(k) is spanned by the minor eigenvectors whose eigenvalues lie farther than eta from E, so dist(X_k, W^(k))^2 is the squared projection of X_k on the eigenvectors inside I. A minor without eigenvalue inside I has W^(k) of full dimension and contributes +inf; the bound is then infinite (still valid). A vanishing distance with eigenvalues inside I is a numerical failure.

    Args:
        matrix (WignerLevyMatrix): Sampled matrix.
        minors (List[MinorSpectrum]): Minor spectra, usually all k.
        energy (float): Center E.
        eta (float): Half-width, positive.

    Returns:
        EsyBound: Bound value, N_I of the full matrix and counts of degenerate minors.
    """
    if not eta > 0.0:
        raise ParameterError(f"eta must be positive, got {eta}", {'eta': eta})
    total = 0.0
    degenerate = 0
    for minor in minors:
        inside = np.abs(minor.spectral.eigenvalues - energy) <= eta
        if not np.any(inside):
            degenerate += 1
            total = np.inf
            continue
        projection = minor.spectral.eigenvectors[:, inside].T @ minor.row
        dist_sq = float(np.sum(projection ** 2))
        if dist_sq <= 0.0:
            raise NumericalError(f"distance of row {minor.k} to W^(k) vanished", {'seed': matrix.seed, 'k': minor.k})
        total += 1.0 / dist_sq
    spec = SpectralData.from_symmetric(matrix.scaled(), seed=matrix.seed)
    count = spec.interval_count(energy - eta, energy + eta)
    value = 4.0 * eta ** 2 * matrix.a_n ** 2 * total
    if degenerate:
        logging.getLogger(LOGGER_NAME).debug(f"ESY bound infinite for seed {matrix.seed}: {degenerate} minors without eigenvalue near {energy}")
    return EsyBound(value=float(value), count=count, minors_used=len(minors), degenerate_minors=degenerate)


def interlacing_gaps(full: SpectralData, minor: SpectralData, thresholds: Iterable[float]) -> np.ndarray:
    """|#{lambda_i(A) <= s} - #{lambda_i(A^{(k)}) <= s}| for each threshold s."""
    s = np.asarray(list(thresholds), dtype=float)
    full_counts = np.searchsorted(full.eigenvalues, s, side='right')
    minor_counts = np.searchsorted(minor.eigenvalues, s, side='right')
    return np.abs(full_counts - minor_counts)


def interval_count_gap(full: SpectralData, minor: SpectralData, a: float, b: float) -> int:
    return abs(full.interval_count(a, b) - minor.interval_count(a, b))


def resolvent_diag_schur(matrix: WignerLevyMatrix, minor: MinorSpectrum, z: complex) -> complex:
    """R_kk = -(z - X_kk / a_n + a_n^{-2} <X_k, R^{(k)} X_k>)^{-1}."""
    z = _check_upper(z)
    a_n = matrix.a_n
    weights = (minor.spectral.eigenvectors.T @ minor.row) ** 2
    quadratic = np.sum(weights / (minor.spectral.eigenvalues - z))
    return complex(-1.0 / (z - matrix.entries[minor.k, minor.k] / a_n + quadratic / a_n ** 2))


def eigenvector_weight_formula(matrix: WignerLevyMatrix, minor: MinorSpectrum, eigenvalue: float) -> float:
    """
    Squared coordinate k of the unit eigenvector for a simple eigenvalue lambda of A that is not an eigenvalue of the minor: (1 + a_n^{-2} <X_k, (A^{(k)} - lambda)^{-2} X_k>)^{-1}.
    """
    weights = (minor.spectral.eigenvectors.T @ minor.row) ** 2
    quadratic = np.sum(weights / (minor.spectral.eigenvalues - eigenvalue) ** 2)
    return float(1.0 / (1.0 + quadratic / matrix.a_n ** 2))


def summarize_minor_checks(matrix: WignerLevyMatrix, minors: List[MinorSpectrum], thresholds: Iterable[float]) -> Dict[str, int]:
    """Largest interlacing gap over the supplied minors."""
    full = SpectralData.from_symmetric(matrix.scaled(), seed=matrix.seed)
    values = list(thresholds)
    worst = 0
    for minor in minors:
        worst = max(worst, int(interlacing_gaps(full, minor.spectral, values).max(initial=0)))
    return {'max_interlacing_gap': worst, 'minors': len(minors)}
