import logging
from dataclasses import dataclass, field

import numpy as np

from errors import ParameterError
from logger import LOGGER_NAME
from stable import StableSampler, check_alpha


@dataclass(frozen=True, eq=False)
class WignerLevyMatrix:
    """
    Symmetric matrix X with i.i.d. symmetric alpha-stable entries on and above the diagonal. The matrix studied is A = X / a_n with a_n = n^{1/alpha}.

    Attributes:
        n (int): Dimension, at least 2.
        alpha (float): Stable index of the entries.
        entries (np.ndarray): Unscaled symmetric matrix X.
        seed (int): Seed that reproduces `entries`.
    """
    n: int
    alpha: float
    entries: np.ndarray = field(repr=False)
    seed: int

    @classmethod
    def build(cls, n: int, alpha: float, seed: int) -> 'WignerLevyMatrix':
        if int(n) != n or n < 2:
            raise ParameterError(f"matrix dimension must be an integer >= 2, got {n}", {'n': n})
        n = int(n)
        alpha = check_alpha(alpha)
        rng = np.random.default_rng(seed)
        rows, cols = np.triu_indices(n)
        upper = StableSampler.sample_sym_stable(alpha, rows.size, rng)
        entries = np.zeros((n, n))
        entries[rows, cols] = upper
        entries[cols, rows] = upper
        entries.setflags(write=False)
        logging.getLogger(LOGGER_NAME).debug(f"Built Levy matrix n={n}, alpha={alpha}, seed={seed}")
        return cls(n=n, alpha=alpha, entries=entries, seed=int(seed))

    @property
    def a_n(self) -> float:
        return float(self.n) ** (1.0 / self.alpha)

    @property
    def limit_scale(self) -> float:
        """
        Factor s = 2^{1/alpha} with A = s A_unit in law, A_unit having entries of unit two-sided tail, the normalization of the limit objects (phi, psi, the recursive equation).
        """
        return 2.0 ** (1.0 / self.alpha)

    def scaled(self) -> np.ndarray:
        return self.entries / self.a_n

    def minor(self, k: int) -> np.ndarray:
        """Scaled principal submatrix A^{(k)} with row and column k removed."""
        keep = np.arange(self.n) != k
        return self.scaled()[np.ix_(keep, keep)]

    def row_without_diagonal(self, k: int) -> np.ndarray:
        """Unscaled row X_k restricted to the coordinates of the minor."""
        keep = np.arange(self.n) != k
        return self.entries[k, keep]
