"""Positive solutions of u'' + a_mu(x) g(u) = 0, u(0) = u(L) = 0, with sign-changing weights."""

from .eigen import EigenProblem, check_hypotheses, first_eigenvalue, prufer_angle
from .expr import DomainError, Expr, ExprError, parse
from .multiplicity import (
    choose_r,
    degree_bookkeeping_check,
    predicted_degree,
    signature_of,
    solve_all,
    sweep_mu,
)
from .radial import AnnulusProblem, back_map, h_inverse, h_map, transform
from .shooting import Problem, ShootingOptions, integrate, isolate_roots, shoot_value
from .weights import Decomposition, WeightFunction, decompose, eval_weight, validate_decomposition

__version__ = "0.1.0"
