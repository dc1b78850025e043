"""Conditional convex risk measures for portfolio vectors on finite probability spaces."""

from .convex import (
    GeneratedSet,
    NormBall,
    bipolar_member,
    gauge,
    hull_member,
    mazur_project,
    polar_member,
    polar_support,
    separate,
)
from .duality import (
    biconjugate_check,
    conjugate,
    fatou_check,
    penalty_from_acceptance,
    represent,
)
from .lpmod import Cone, DualElement, Position, cond_norm, dual_norm, pair, portfolio_norm
from .prob import ProbSpace, SubAlgebra, build_space, build_subalgebra, is_coarser
from .randvar import ExtRandVar, RandVar, cond_expect, concatenate, eps_attain_inf, ess_inf, ess_sup
from .risk import RiskMeasure, accept, check_axioms, evaluate

__all__ = [
    "Cone",
    "DualElement",
    "ExtRandVar",
    "GeneratedSet",
    "NormBall",
    "Position",
    "ProbSpace",
    "RandVar",
    "RiskMeasure",
    "SubAlgebra",
    "accept",
    "biconjugate_check",
    "bipolar_member",
    "build_space",
    "build_subalgebra",
    "check_axioms",
    "concatenate",
    "cond_expect",
    "cond_norm",
    "conjugate",
    "dual_norm",
    "eps_attain_inf",
    "ess_inf",
    "ess_sup",
    "evaluate",
    "fatou_check",
    "gauge",
    "hull_member",
    "is_coarser",
    "mazur_project",
    "pair",
    "penalty_from_acceptance",
    "polar_member",
    "polar_support",
    "portfolio_norm",
    "represent",
    "separate",
]
