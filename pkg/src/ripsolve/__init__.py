"""Rate-independent systems: viscous approximation, vanishing-viscosity limits
and validation of parametrized, BV, energetic, local and Phi-minimal solutions."""
from .bvcalc import (DissipationBudget, SlopeDistanceQuery, chain_rule_residual, gamma_func, gamma_star,
                     jump_relation_residuals, sigma0, sigma1, slope_distance)
from .catalog import ExampleSpec, catalog, connecting_family, local_solution, reference_eval
from .curves import BVTrajectory, JumpRecord, ParametrizedCurve, Trajectory
from .errors import DomainError, PreconditionError, RipsolveError, SolverError
from .reparam import (VariationMeasure, arclength_profile, measure_push, project_to_bv, reparametrize,
                      variation)
from .solutions import (PhiEvaluation, ValidationReport, jump_transition, lambda_form_check, n_function,
                        phi_functional, phi_order, solve_energetic, validate_bv, validate_energetic,
                        validate_local, validate_parametrized, vanishing_viscosity)
from .systems import (EuclideanNorm, System, WeightedL1Norm, distance, global_slope, lambda_multiplier,
                      load_system, local_slope)
from .transition import TransitionCost, gamma_probe, m_eps, m_inf, m_tilde, m_zero, xi_classify
from .viscous import (SolverOptions, ViscosityParam, balance_residual, psi, psi_star, solve_viscous,
                      viscous_step)

__version__ = "0.1.0"

__all__ = [
    "DissipationBudget",
    "SlopeDistanceQuery",
    "chain_rule_residual",
    "gamma_func",
    "gamma_star",
    "jump_relation_residuals",
    "sigma0",
    "sigma1",
    "slope_distance",
    "ExampleSpec",
    "catalog",
    "connecting_family",
    "local_solution",
    "reference_eval",
    "BVTrajectory",
    "JumpRecord",
    "ParametrizedCurve",
    "Trajectory",
    "DomainError",
    "PreconditionError",
    "RipsolveError",
    "SolverError",
    "VariationMeasure",
    "arclength_profile",
    "measure_push",
    "project_to_bv",
    "reparametrize",
    "variation",
    "PhiEvaluation",
    "ValidationReport",
    "jump_transition",
    "lambda_form_check",
    "n_function",
    "phi_functional",
    "phi_order",
    "solve_energetic",
    "validate_bv",
    "validate_energetic",
    "validate_local",
    "validate_parametrized",
    "vanishing_viscosity",
    "EuclideanNorm",
    "System",
    "WeightedL1Norm",
    "distance",
    "global_slope",
    "lambda_multiplier",
    "load_system",
    "local_slope",
    "TransitionCost",
    "gamma_probe",
    "m_eps",
    "m_inf",
    "m_tilde",
    "m_zero",
    "xi_classify",
    "SolverOptions",
    "ViscosityParam",
    "balance_residual",
    "psi",
    "psi_star",
    "solve_viscous",
    "viscous_step",
]
