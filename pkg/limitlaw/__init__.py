from limitlaw.cone import ConeValue, bilinear, in_cone
from limitlaw.density import (DensityEstimate, IntervalMass, StieltjesCurve, density_grid, interval_mass_from_stieltjes,
                              limit_density, total_mass)
from limitlaw.kernel import fractional_laplace, fractional_laplace_fixed
from limitlaw.solver import FixedPointSolver, LimitPoint, SolverOptions
from limitlaw.transforms import phi, phi_monte_carlo, psi, psi_monte_carlo, unit_subordinator_sigma

__all__ = ['ConeValue', 'DensityEstimate', 'FixedPointSolver', 'IntervalMass', 'LimitPoint', 'SolverOptions', 'StieltjesCurve',
           'bilinear', 'density_grid', 'fractional_laplace', 'fractional_laplace_fixed', 'in_cone', 'interval_mass_from_stieltjes',
           'limit_density', 'phi', 'phi_monte_carlo', 'psi', 'psi_monte_carlo', 'total_mass',
           'unit_subordinator_sigma']
