"""Monopoly pricing over segmented markets and the consumer-optimal segmentation.

A market is a distribution over a strictly increasing grid of consumer
valuations. Prices are always grid points and are stored as indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_vector, check_index, frozen, is_simplex, is_strictly_increasing
from .core import PLAUSIBILITY_TOL, TIE_TOL

# Residual coordinates below this are treated as exhausted.
RESIDUAL_TOL = 1e-12


class MarketError(ValueError):
    pass


class ResidualStall(RuntimeError):
    """The extremal peel made no progress although mass remains."""


@dataclass(frozen=True)
class Market:
    values: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        values = as_float_vector(self.values, "values")
        masses = as_float_vector(self.masses, "masses")
        if values.size != masses.size:
            raise MarketError(f"{values.size} values but {masses.size} masses")
        if values[0] <= 0 or not is_strictly_increasing(values):
            raise MarketError(f"values must satisfy 0 < v_1 < ... < v_n, got {values}")
        if not is_simplex(masses):
            raise MarketError(f"masses must be a probability vector, got {masses}")
        object.__setattr__(self, "values", frozen(values))
        object.__setattr__(self, "masses", frozen(np.clip(masses, 0.0, None)))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def total_value(self) -> float:
        return float(np.dot(self.values, self.masses))


def _tails(masses: np.ndarray) -> np.ndarray:
    return np.cumsum(masses[..., ::-1], axis=-1)[..., ::-1]


def revenue(market: Market, k: int) -> float:
    """Revenue from posting price ``values[k]``: everyone valuing at least that buys."""
    k = check_index(k, market.n)
    return float(market.values[k] * np.sum(market.masses[k:]))


def revenues(market: Market) -> np.ndarray:
    return market.values * _tails(market.masses)


def optimal_uniform_price(market: Market) -> int:
    """Smallest revenue-maximizing price index."""
    rev = revenues(market)
    return int(np.flatnonzero(rev >= rev.max() - TIE_TOL)[0])


def extremal_market(values, support) -> Market:
    """The market on ``support`` in which every supported price earns the same revenue.

    Normalizing demand at the lowest supported price to one, demand at
    ``values[s]`` is ``values[support[0]] / values[s]``; masses are the
    differences of consecutive demands.
    """
    values = as_float_vector(values, "values")
    support = np.unique(np.asarray(support, dtype=int))
    if support.size == 0:
        raise MarketError("support must be non-empty")
    for s in support:
        check_index(s, values.size, "support index")
    demand = values[support[0]] / values[support]
    masses = np.zeros(values.size)
    masses[support] = demand - np.append(demand[1:], 0.0)
    return Market(values, masses)


@dataclass(frozen=True)
class Segmentation:
    """Weighted markets on a shared value grid, each with its posted price index."""

    values: np.ndarray
    weights: np.ndarray
    masses: np.ndarray
    price_indices: np.ndarray

    def __post_init__(self):
        values = as_float_vector(self.values, "values")
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        masses = np.atleast_2d(np.asarray(self.masses, dtype=np.float64))
        prices = np.atleast_1d(np.asarray(self.price_indices, dtype=int))
        if not (w.size == masses.shape[0] == prices.size) or masses.shape[1] != values.size:
            raise MarketError("inconsistent segmentation shapes")
        if np.any(w <= 0) or abs(float(np.sum(w)) - 1.0) > PLAUSIBILITY_TOL:
            raise MarketError(f"segment weights must be positive and sum to 1, got {w}")
        if np.any(prices < 0) or np.any(prices >= values.size):
            raise MarketError("price index off the value grid")
        for row in masses:
            if not is_simplex(row, PLAUSIBILITY_TOL):
                raise MarketError(f"segment {row} is not a probability vector")
        object.__setattr__(self, "values", frozen(values))
        object.__setattr__(self, "weights", frozen(w))
        object.__setattr__(self, "masses", frozen(masses))
        price_arr = prices.copy()
        price_arr.flags.writeable = False
        object.__setattr__(self, "price_indices", price_arr)

    @property
    def m(self) -> int:
        return self.weights.size

    @property
    def prices(self) -> np.ndarray:
        return self.values[self.price_indices]

    def aggregate(self) -> np.ndarray:
        return self.weights @ self.masses

    def segment(self, i: int) -> Market:
        return Market(self.values, self.masses[i])


@dataclass(frozen=True)
class SurplusReport:
    consumer: float
    producer: float
    total: float


def bbm_segmentation(market: Market) -> Segmentation:
    """Consumer-surplus-maximizing segmentation by greedy extremal peeling.

    Repeatedly take the support of what is left, remove as much of that
    support's extremal market as fits, and price the piece at its lowest
    value. The uniform monopoly price stays optimal in every piece, so the
    producer earns exactly the uniform monopoly revenue while every consumer
    buys.
    """
    residual = np.array(market.masses)
    weights, rows, prices = [], [], []
    while residual.sum() >= RESIDUAL_TOL:
        support = np.flatnonzero(residual >= RESIDUAL_TOL)
        piece = extremal_market(market.values, support).masses
        beta = float(np.min(residual[support] / piece[support]))
        if not beta > 0:
            raise ResidualStall(f"no progress with residual {residual}")
        residual = residual - beta * piece
        residual[residual < RESIDUAL_TOL] = 0.0
        weights.append(beta)
        rows.append(piece)
        prices.append(int(support[0]))
    w = np.array(weights)
    return Segmentation(market.values, w / math.fsum(w), np.array(rows), prices)


def uniform_segmentation(market: Market) -> Segmentation:
    """The aggregate market as one segment at the monopoly price."""
    return Segmentation(market.values, [1.0], [market.masses], [optimal_uniform_price(market)])


def full_revelation_segmentation(market: Market) -> Segmentation:
    """Every valuation in its own segment, priced at that valuation."""
    support = np.flatnonzero(market.masses > 0)
    return Segmentation(
        market.values, market.masses[support], np.eye(market.n)[support], support
    )


def surpluses(seg: Segmentation) -> SurplusReport:
    idx = np.arange(seg.values.size)
    consumer = producer = 0.0
    for w, row, k in zip(seg.weights, seg.masses, seg.price_indices):
        price = seg.values[k]
        buy = idx >= k
        consumer += w * float(np.sum(row[buy] * (seg.values[buy] - price)))
        producer += w * price * float(np.sum(row[buy]))
    return SurplusReport(float(consumer), float(producer), float(consumer + producer))


def surplus_triangle(market: Market) -> dict[str, tuple[float, float]]:
    """Vertices (consumer, producer) of the feasible surplus region."""
    monopoly = revenue(market, optimal_uniform_price(market))
    total = market.total_value
    return {"A": (0.0, monopoly), "B": (total - monopoly, monopoly), "C": (0.0, total)}


def pareto_mix(market: Market, lam: float) -> Segmentation:
    """Randomize between the consumer-optimal segmentation (weight 1-lam) and full revelation (lam)."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise MarketError(f"mixing weight must lie in [0, 1], got {lam}")
    parts = []
    if lam < 1.0:
        parts.append((1.0 - lam, bbm_segmentation(market)))
    if lam > 0.0:
        parts.append((lam, full_revelation_segmentation(market)))
    return Segmentation(
        market.values,
        np.concatenate([scale * s.weights for scale, s in parts]),
        np.vstack([s.masses for _, s in parts]),
        np.concatenate([s.price_indices for _, s in parts]),
    )


def is_price_optimal(seg: Segmentation) -> bool:
    """Every segment's price earns the segment's maximal revenue."""
    for row, k in zip(seg.masses, seg.price_indices):
        rev = seg.values * _tails(row)
        if rev[k] < rev.max() - TIE_TOL:
            return False
    return True
