"""Anomalous eternal self-similar solutions of a weighted fast diffusion
equation with a source, ``u_t = Δu^m + |x|^σ u^p``.

The eternal solutions have the form ``u = e^{αt} f(|x| e^{-βt})``; the
exponents are selected by a saddle-saddle connection in a planar phase
space, located by shooting on the parameter ``K``.
"""

from .errors import (AnomalousError, BracketLost, BracketNotFound, ConstraintViolated,
                     DegenerateOrbit, DomainError, NoEternalSolutions, NonIntegrableTail,
                     NotEquilibrium, ShootingError, SolverError, StepFailure, Unsupported)
from .explicit import (explicit_connection_constants, explicit_connection_orbit,
                       explicit_line_families, fisher_first_integral_check, p2_power_solution,
                       sobolev_connection_curve, stationary_sobolev)
from .integrate import IntegrationControls, Orbit, integrate_orbit
from .params import (ExponentPair, ModelParams, Regime, derive_params, exponents_from_K,
                     fujita_gap, renormalized_coefficients)
from .phaseplane import (CriticalPoint, SystemVariant, finite_critical_points,
                         infinity_critical_points, linearize_and_classify, vector_field)
from .profiles import (EternalSolution, Profile, evaluate_solution, mass, ode_residual,
                       reconstruct_profile)
from .selfmap import SelfMapImage, map_parameters, map_profile
from .shooting import ShootingResult, find_K_star, g_of_K, launch_separatrix, solve_anomalous

__all__ = [
    "AnomalousError", "BracketLost", "BracketNotFound", "ConstraintViolated", "DegenerateOrbit",
    "DomainError", "NoEternalSolutions", "NonIntegrableTail", "NotEquilibrium", "ShootingError",
    "SolverError", "StepFailure", "Unsupported",
    "explicit_connection_constants", "explicit_connection_orbit", "explicit_line_families",
    "fisher_first_integral_check", "p2_power_solution", "sobolev_connection_curve",
    "stationary_sobolev",
    "IntegrationControls", "Orbit", "integrate_orbit",
    "ExponentPair", "ModelParams", "Regime", "derive_params", "exponents_from_K", "fujita_gap",
    "renormalized_coefficients",
    "CriticalPoint", "SystemVariant", "finite_critical_points", "infinity_critical_points",
    "linearize_and_classify", "vector_field",
    "EternalSolution", "Profile", "evaluate_solution", "mass", "ode_residual",
    "reconstruct_profile",
    "SelfMapImage", "map_parameters", "map_profile",
    "ShootingResult", "find_K_star", "g_of_K", "launch_separatrix", "solve_anomalous",
]
