"""Normalized solutions, reduced limits and dynamics for a quadratic Schrodinger system."""
from .grid import (Axis, FieldPair, GridError, GridSpec, cartesian, cylindrical, dirichlet, integrate,
                   laplacian_apply, make_grid, norm2, radial)
from .operators import SeparableOperator
from .oscillator import (OscillatorBasis, SpectrumError, overlap_constants, printed_overlap_constants,
                         project_lowest, transverse_grid, transverse_spectrum)
from .functionals import (FunctionalReport, ModelError, ModelParams, axial_virial_N1, energy_E, energy_I,
                          gn_quotient, interaction_K, mass_Q, pohozaev_B, report, steiner_rearrange_axial,
                          virial_moment, virial_rhs)
from .groundstate import (ConstraintSpec, GroundStateResult, SolverConfig, SolverError, curve_N_of_t, resonant_product_state,
                          fibering_profile, multipliers, scaled_curve_point, solve_free_soliton,
                          solve_groundstate)
from .reduced import ComparisonReport, Reduced1DProblem, compare_full_vs_reduced, solve_reduced
from .dynamics import (DynamicsError, EvolveConfig, TimeSeries, blowup_class_check, evolve,
                       global_threshold_check, linear_step, nonlinear_step)

__version__ = "0.1.0"
