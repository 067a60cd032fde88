"""Brute-force baselines for cross-checking the solvers.

Everything here works from first principles (explicit outcome enumeration
and dense grids) and deliberately imports nothing from the segmentation,
reduction or repeated modules.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import PersuasionInstance, UtilityReport

_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 50
    max_segments: int = 2

    def __post_init__(self):
        if self.resolution < 8:
            raise ValueError("resolution must be at least 8")
        if self.max_segments not in (2, 3):
            raise ValueError("max_segments must be 2 or 3")


def _follows(mu: float, theta: float, lie: float) -> bool:
    """Whether a user told to buy does so, from its posterior on product quality."""
    posterior_good = mu / (mu + (1.0 - mu) * lie)
    return posterior_good * theta - (1.0 - posterior_good) >= -_TOL


def _type_outcomes(inst: PersuasionInstance, lie: float):
    """Per type: probability of a sale, probability of a sale of a bad product, expected utility."""
    mu = inst.mu
    sales = np.zeros(inst.n)
    bad_sales = np.zeros(inst.n)
    utility = np.zeros(inst.n)
    for j, theta in enumerate(inst.theta):
        for good, p_state in ((True, mu), (False, 1.0 - mu)):
            p_recommend = 1.0 if good else lie
            for rec, p_rec in ((1, p_recommend), (0, 1.0 - p_recommend)):
                prob = p_state * p_rec
                if prob == 0.0 or rec == 0 or not _follows(mu, theta, lie):
                    continue
                sales[j] += prob
                if good:
                    utility[j] += prob * theta
                else:
                    bad_sales[j] += prob
                    utility[j] -= prob
    return sales, bad_sales, utility


def enumerate_one_shot_utilities(inst: PersuasionInstance, x, lie: float) -> UtilityReport:
    """Sender, platform and per-type utilities by summing over (type, quality, recommendation)."""
    sales, _, utility = _type_outcomes(inst, lie)
    x = np.asarray(x, dtype=np.float64)
    return UtilityReport(float(np.dot(x, sales)), float(np.dot(x, utility)), utility)


def _grid(upper: np.ndarray, resolution: int) -> np.ndarray:
    axes = [np.linspace(0.0, u, resolution) for u in upper]
    return np.array(list(itertools.product(*axes)))


def _consumer_surplus(values: np.ndarray, seg: np.ndarray) -> np.ndarray:
    """Consumer surplus of unnormalized segments (rows) at their lowest revenue-maximizing price."""
    n = values.size
    demand = np.stack([seg[:, k:].sum(axis=1) for k in range(n)], axis=1)
    rev = demand * values
    price = np.argmax(rev >= rev.max(axis=1, keepdims=True) - _TOL, axis=1)
    cs = np.zeros(seg.shape[0])
    for k in range(n):
        sel = price == k
        gains = np.clip(values - values[k], 0.0, None)
        cs[sel] = seg[sel] @ gains
    return cs


def grid_segmentation_search(values, masses, spec: GridSpec = GridSpec()) -> float:
    """Best consumer surplus over gridded splits of the market into up to ``max_segments`` pieces."""
    values = np.asarray(values, dtype=np.float64)
    masses = np.asarray(masses, dtype=np.float64)
    first = _grid(masses, spec.resolution)
    best = float(np.max(_consumer_surplus(values, first) + _consumer_surplus(values, masses - first)))
    if spec.max_segments == 3:
        # The second piece ranges over the box left by the first, scanned in blocks.
        unit = _grid(np.ones(values.size), spec.resolution)
        cs_first = _consumer_surplus(values, first)
        block = max(1, 200_000 // unit.shape[0])
        for start in range(0, first.shape[0], block):
            a = first[start:start + block]
            second = ((masses - a)[:, None, :] * unit[None, :, :]).reshape(-1, values.size)
            a_rep = np.repeat(a, unit.shape[0], axis=0)
            third = np.clip(masses - a_rep - second, 0.0, None)
            cs = np.repeat(cs_first[start:start + block], unit.shape[0]) + _consumer_surplus(values, second) + _consumer_surplus(values, third)
            best = max(best, float(cs.max()))
    return best


def _best_sales(inst: PersuasionInstance, posts: np.ndarray) -> np.ndarray:
    """Greedy sender utility on each row of (unnormalized) ``posts`` by trying every lie level."""
    best = np.zeros(posts.shape[0])
    for lie in np.concatenate([[0.0], inst.thresholds]):
        best = np.maximum(best, posts @ _type_outcomes(inst, lie)[0])
    return best


@dataclass(frozen=True)
class RepeatedSearchResult:
    value: float
    platform: float
    split: np.ndarray
    alpha: float


def grid_repeated_search(inst: PersuasionInstance, spec: GridSpec = GridSpec(resolution=400)) -> RepeatedSearchResult:
    """Scan splits ``m`` of the prior into truthful mass and remainder on a dense grid.

    For each split the sender's truthful value is computed directly and each
    one-period deviation on the truthful posterior is compared with
    compliance through its discounted payoff. Returns the feasible split with
    the lowest value and the users' utility that value implies.
    """
    mu, delta, u_bar = inst.mu, inst.delta, inst.u_bar
    if delta is None:
        raise ValueError("instance has no repeated block")
    prior = np.asarray(inst.prior)
    m = _grid(prior, spec.resolution)
    alpha = m.sum(axis=1)
    rest = np.clip(prior - m, 0.0, None)
    value = alpha * mu + _best_sales(inst, rest)

    ok = np.ones(m.shape[0], dtype=bool)
    comply = (1.0 - delta) * mu + delta * value
    active = alpha > _TOL
    x_t = m[active] / alpha[active, None]
    for lie in inst.thresholds:
        sales, bad_sales, _ = _type_outcomes(inst, lie)
        today = x_t @ sales
        caught = x_t @ bad_sales
        deviate = (1.0 - delta) * today + delta * (caught * u_bar + (1.0 - caught) * value[active])
        ok[active] &= deviate <= comply[active] + _TOL

    order = np.lexsort(tuple(m.T[::-1]) + (np.where(ok, value, np.inf),))
    i = int(order[0])
    total = mu * (1.0 + float(np.dot(prior, inst.theta)))
    return RepeatedSearchResult(float(value[i]), total - float(value[i]), m[i], float(alpha[i]))


def analytic_v_star(inst: PersuasionInstance) -> float:
    """Candidate optimal truthful value: the k=1 incentive bound clamped to [mu, monopoly utility]."""
    mu, delta, u_bar = inst.mu, inst.delta, inst.u_bar
    bound = (1.0 - delta) / delta + u_bar
    monopoly = float(_best_sales(inst, np.asarray(inst.prior)[None, :])[0])
    return min(max(bound, mu), monopoly)
