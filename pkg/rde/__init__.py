from rde.operator import (ContractionMeasure, GammaGrid, GOperatorConfig, apply_G_operator, c_alpha, fixed_point_constant,
                          measure_contraction, norm_beta_eps)
from rde.poisson import PoissonWeights, sample_poisson_weights, truncated_tail_mean
from rde.population import (DynamicsConfig, DynamicsRun, PopulationDynamics, ResolventPool, VanishingTable, rde_frac_moment,
                            rde_frac_moment_stats, vanishing_imag_diagnostic)
from rde.real_axis import RealAxisSolution, real_axis_law_samples, solve_real_axis_ab, unit_subordinator_sigma

__all__ = ['ContractionMeasure', 'DynamicsConfig', 'DynamicsRun', 'GOperatorConfig', 'GammaGrid', 'PoissonWeights', 'PopulationDynamics',
           'RealAxisSolution', 'ResolventPool', 'VanishingTable', 'apply_G_operator', 'c_alpha', 'fixed_point_constant',
           'measure_contraction', 'norm_beta_eps', 'rde_frac_moment', 'rde_frac_moment_stats', 'real_axis_law_samples',
           'sample_poisson_weights', 'solve_real_axis_ab', 'truncated_tail_mean', 'unit_subordinator_sigma']
