"""Adversarial perturbation search: gradient-based and query-based attacks."""

from .whitebox import (
    WhiteboxConfig,
    MinEpsilonResult,
    pgd_bounded,
    subset_arbitrary,
    min_epsilon_search,
)
from .blackbox import (
    AttackTrace,
    ScoreOracle,
    LabelOracle,
    SquareAttackConfig,
    TriangleAttackConfig,
    square_attack,
    triangle_attack,
    removal_init_gaussian,
    forgery_init_unrelated,
)

__all__ = [
    "WhiteboxConfig",
    "MinEpsilonResult",
    "pgd_bounded",
    "subset_arbitrary",
    "min_epsilon_search",
    "AttackTrace",
    "ScoreOracle",
    "LabelOracle",
    "SquareAttackConfig",
    "TriangleAttackConfig",
    "square_attack",
    "triangle_attack",
    "removal_init_gaussian",
    "forgery_init_unrelated",
]
