"""Best uniform (minimax) polynomial approximation with optimality certificates."""

from .basis import BoxDomain, MonomialBasis, build_basis, eval_basis
from .center import CenterProblem, solve_center
from .certify import certify, subgradient_matrix
from .pipeline import SolveConfig, approximate
from .target import HornerTarget, SetValuedTarget, airy_target, runge_target

__version__ = "0.1.0"

__all__ = [
    "BoxDomain",
    "CenterProblem",
    "HornerTarget",
    "MonomialBasis",
    "SetValuedTarget",
    "SolveConfig",
    "airy_target",
    "approximate",
    "build_basis",
    "certify",
    "eval_basis",
    "runge_target",
    "solve_center",
    "subgradient_matrix",
]
