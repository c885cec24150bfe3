from experiments.base import BaseExperiment
from experiments.eigenvectors import DelocalizationExperiment, LocalizationExperiment, eigenvector_weights, support_threshold
from experiments.frac_moment import FixedPointResidualExperiment, FracMomentVanishingExperiment
from experiments.gaussian import GaussianProjectionExperiment, projected_norms
from experiments.local_law import ConcentrationExperiment, LocalLawExperiment, interval_length, tile_window
from experiments.rde_checks import RdeCrossCheck, RealAxisCheck, VanishingImagExperiment
from experiments.report import ExperimentReport, to_builtin, write_csv
from experiments.rho import RhoGamma, rho_of_alpha
from experiments.wegner import WegnerExperiment, eta_cutoff

EXPERIMENTS = {experiment.name: experiment for experiment in (
    LocalLawExperiment, ConcentrationExperiment, WegnerExperiment, DelocalizationExperiment, LocalizationExperiment,
    VanishingImagExperiment, RdeCrossCheck, RealAxisCheck, FracMomentVanishingExperiment, GaussianProjectionExperiment,
    FixedPointResidualExperiment,
)}

__all__ = ['BaseExperiment', 'ConcentrationExperiment', 'DelocalizationExperiment', 'EXPERIMENTS', 'ExperimentReport',
           'FixedPointResidualExperiment', 'FracMomentVanishingExperiment', 'GaussianProjectionExperiment', 'LocalLawExperiment',
           'LocalizationExperiment', 'RdeCrossCheck', 'RealAxisCheck', 'RhoGamma', 'VanishingImagExperiment', 'WegnerExperiment',
           'eigenvector_weights', 'eta_cutoff', 'interval_length', 'projected_norms', 'rho_of_alpha', 'support_threshold',
           'tile_window', 'to_builtin', 'write_csv']
