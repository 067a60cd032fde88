"""Translate a persuasion instance into a pricing problem and back.

A type's persuasion threshold becomes a valuation ``mu + (1 - mu) * tau``,
the user distribution becomes the market, and a lying probability becomes
the posted price ``mu + (1 - mu) * p``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    TIE_TOL,
    PersuasionError,
    PersuasionInstance,
    PlatformPolicy,
    SenderPolicy,
    UtilityReport,
    platform_utility,
    policy_utilities,
)
from .segmentation import Market, Segmentation, bbm_segmentation


class PriceBelowMu(PersuasionError):
    pass


@dataclass(frozen=True)
class ReductionMap:
    instance: PersuasionInstance
    market: Market


def to_market(inst: PersuasionInstance) -> ReductionMap:
    return ReductionMap(inst, Market(inst.mu * (1.0 + inst.theta), inst.prior))


def price_to_lie(price: float, mu: float) -> float:
    if price < mu - TIE_TOL:
        raise PriceBelowMu(f"price {price} is below mu={mu}")
    return max(0.0, (price - mu) / (1.0 - mu))


def lie_to_price(p: float, mu: float) -> float:
    return mu + (1.0 - mu) * p


def pull_back(seg: Segmentation, rmap: ReductionMap) -> tuple[PlatformPolicy, SenderPolicy]:
    """Read a segmentation as a platform policy plus the sender's lying probabilities.

    Segments keep their order and weight. Each grid price maps to the
    threshold of the matching type, which equals ``price_to_lie`` of the price
    up to rounding.
    """
    if seg.values.shape != rmap.market.values.shape or not np.allclose(
        seg.values, rmap.market.values, rtol=0.0, atol=TIE_TOL
    ):
        raise PersuasionError("segmentation is not on the instance's valuation grid")
    policy = PlatformPolicy(seg.weights, seg.masses)
    lies = rmap.instance.thresholds[seg.price_indices]
    return policy, SenderPolicy(lies)


def solve_one_shot(inst: PersuasionInstance) -> tuple[PlatformPolicy, SenderPolicy, UtilityReport]:
    """User-optimal disclosure policy for the one-shot game."""
    rmap = to_market(inst)
    policy, sender = pull_back(bbm_segmentation(rmap.market), rmap)
    return policy, sender, policy_utilities(inst, policy, sender)


def check_reduction_identity(x, p: float, rmap: ReductionMap, tol: float = 1e-12) -> bool:
    """Sender utility equals producer revenue and each type's utility equals its consumer surplus."""
    inst, values = rmap.instance, rmap.market.values
    x = np.asarray(x, dtype=np.float64)
    report = platform_utility(inst, x, p)
    price = lie_to_price(p, inst.mu)
    buys = price <= values + TIE_TOL
    producer = price * float(np.sum(x[buys]))
    consumer = np.where(buys, values - price, 0.0)
    return bool(
        abs(report.sender - producer) <= tol
        and np.all(np.abs(report.per_type - consumer) <= tol)
    )
