"""Numerical toolkit for heat conduction with memory.

Builds the per-mode resolvent of the linear integro-differential
problem, simulates mild solutions under state-dependent delay, and
synthesizes regularized steering controls whose terminal error decays
with the regularization parameter.
"""

from ._core import BACKEND
from .control import (
    Gramian,
    assemble_gramian,
    control_energy,
    cost_functional,
    lambda_sweep,
    linear_optimal_control,
    nonlinear_control_loop,
    optimality_perturbation_test,
    regularized_solve,
)
from .duality import contraction_and_decay_check, duality_map, monotone_solve
from .errors import ConfigError, InvariantViolation, NumericalError
from .history import (
    DelayLaw,
    HistorySegment,
    decaying_mode_history,
    delay_evaluate,
    history_bound_constants,
    segment_extract,
    weighted_norm,
)
from .mild import (
    DelayProblem,
    Nonlinearity,
    Trajectory,
    evaluate_nonlinearity,
    method_of_steps_oracle,
    picard_solve,
    smallness_condition,
)
from .resolvent import (
    ResolventTable,
    TimeGrid,
    build_resolvent_table,
    cocycle_defect,
    cocycle_ratio_sweep,
    evolution_factor,
    exponential_bound_fit,
    forward_correction_defect,
    fractional_bound_scan,
    inverse_correction_defect,
    solve_mode_resolvent,
)
from .spectral import (
    BasisSpec,
    CoefficientFunctions,
    control_matrix,
    default_coefficients,
    fractional_power_apply,
    project,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BasisSpec",
    "CoefficientFunctions",
    "ConfigError",
    "DelayLaw",
    "DelayProblem",
    "Gramian",
    "HistorySegment",
    "InvariantViolation",
    "Nonlinearity",
    "NumericalError",
    "ResolventTable",
    "TimeGrid",
    "Trajectory",
    "assemble_gramian",
    "build_resolvent_table",
    "cocycle_defect",
    "cocycle_ratio_sweep",
    "contraction_and_decay_check",
    "control_energy",
    "control_matrix",
    "cost_functional",
    "decaying_mode_history",
    "default_coefficients",
    "delay_evaluate",
    "duality_map",
    "evaluate_nonlinearity",
    "evolution_factor",
    "exponential_bound_fit",
    "forward_correction_defect",
    "fractional_bound_scan",
    "fractional_power_apply",
    "history_bound_constants",
    "inverse_correction_defect",
    "lambda_sweep",
    "linear_optimal_control",
    "method_of_steps_oracle",
    "monotone_solve",
    "nonlinear_control_loop",
    "optimality_perturbation_test",
    "picard_solve",
    "project",
    "regularized_solve",
    "segment_extract",
    "smallness_condition",
    "solve_mode_resolvent",
    "weighted_norm",
]
