"""Probabilistic type inference that combines logical constraints from code with
naming-based type predictions by continuous optimisation."""
from .errors import SoftTypeError
from .logic import (
    And,
    Constraint,
    IdentifierSet,
    Is,
    Not,
    Or,
    TypeEnvironment,
    TypeUniverse,
    enumerate_environments,
    satisfies,
    to_binary_matrix,
)
from .optim import OptimiserConfig, SolveReport, discretise, solve, solve_logical_only
from .relax import eval_log, eval_prob

__version__ = "0.1.0"

__all__ = [
    "And",
    "Constraint",
    "IdentifierSet",
    "Is",
    "Not",
    "OptimiserConfig",
    "Or",
    "SoftTypeError",
    "SolveReport",
    "TypeEnvironment",
    "TypeUniverse",
    "discretise",
    "enumerate_environments",
    "eval_log",
    "eval_prob",
    "satisfies",
    "solve",
    "solve_logical_only",
    "to_binary_matrix",
]
