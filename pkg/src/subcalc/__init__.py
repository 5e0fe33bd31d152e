"""High-order convolution quadrature for fractional substantial calculus."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (
    ConditioningError,
    ConvergenceError,
    DomainError,
    GridFormatError,
    PreconditionError,
    SubcalcError,
)
from .gridops import GridFunction, apply, apply_fast, max_error, solve
from .harness import (
    ConvergenceReport,
    Experiment,
    Problem,
    fit_order,
    run_experiment,
    run_identity_suite,
    run_named,
)
from .oracle import (
    PowerExpFunction,
    QuadratureConfig,
    power_exp_transform,
    singular_quadrature,
    substantial_derivative_quadrature,
)
from .starting import StartingWeightSet, corrected_apply, corrected_solve, starting_weights
from .weights import OperatorSpec, WeightTable, consistency_defect, generating_polynomial, weights

__all__ = [
    "BACKEND",
    "ConditioningError",
    "ConvergenceError",
    "ConvergenceReport",
    "DomainError",
    "Experiment",
    "GridFormatError",
    "GridFunction",
    "OperatorSpec",
    "PowerExpFunction",
    "PreconditionError",
    "Problem",
    "QuadratureConfig",
    "StartingWeightSet",
    "SubcalcError",
    "WeightTable",
    "apply",
    "apply_fast",
    "consistency_defect",
    "corrected_apply",
    "corrected_solve",
    "fit_order",
    "generating_polynomial",
    "max_error",
    "power_exp_transform",
    "run_experiment",
    "run_identity_suite",
    "run_named",
    "singular_quadrature",
    "solve",
    "starting_weights",
    "substantial_derivative_quadrature",
    "weights",
]
