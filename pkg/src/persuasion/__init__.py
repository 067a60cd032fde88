"""Information design for a platform facing a persuasive sender."""

from .core import (
    PersuasionError,
    PersuasionInstance,
    PlatformPolicy,
    SenderPolicy,
    UtilityReport,
    greedy_best_response,
    improve_to_lowest_type_targeting,
    is_lowest_type_targeting,
    platform_utility,
    policy_utilities,
    sender_utility,
    validate_instance,
)
from .estimators import OneShotPlatform, RepeatedPlatform
from .reduction import solve_one_shot, to_market
from .repeated import SolverConfig, SolveResult, is_incentive_compatible, solve_repeated
from .segmentation import Market, Segmentation, bbm_segmentation, pareto_mix, surpluses
from .simulate import SimConfig, simulate

__all__ = [
    "Market",
    "OneShotPlatform",
    "PersuasionError",
    "PersuasionInstance",
    "PlatformPolicy",
    "RepeatedPlatform",
    "Segmentation",
    "SenderPolicy",
    "SimConfig",
    "SolveResult",
    "SolverConfig",
    "UtilityReport",
    "bbm_segmentation",
    "greedy_best_response",
    "improve_to_lowest_type_targeting",
    "is_incentive_compatible",
    "is_lowest_type_targeting",
    "pareto_mix",
    "platform_utility",
    "policy_utilities",
    "sender_utility",
    "simulate",
    "solve_one_shot",
    "solve_repeated",
    "surpluses",
    "to_market",
    "validate_instance",
]
