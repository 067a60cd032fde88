"""Reputation-based platform: incentive compatibility and the optimal policy search.

The platform designates one truthful posterior ``x_t`` with weight
``alpha_t``. A sender caught recommending a bad product that was bought on
``x_t`` is punished forever with per-period utility ``u_bar``. Values are
normalized discounted sums, ``(1 - delta) * sum(delta**t * u_t)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    PersuasionError,
    PersuasionInstance,
    PlatformPolicy,
    SenderPolicy,
    greedy_best_response,
    is_lowest_type_targeting,
    policy_utilities,
    sender_utility,
    tail_mass,
    truthful_strategy,
)
from .reduction import solve_one_shot

# Tails at or below this make a deviation sell nothing; the constraint is skipped.
ZERO_TAIL_TOL = 1e-12
# A truthful weight at or below this is treated as no truthful posterior.
ALPHA_TOL = 1e-12
IC_TOL = 1e-12
# Step-one feasibility demands this much slack so rebuilding the policy cannot round below zero.
SEARCH_MARGIN = 1e-10


class ZeroTail(ValueError):
    """No user on the truthful posterior would follow the deviation."""


class NotLowestTypeTargeting(PersuasionError):
    pass


class MissingRepeatedParameters(PersuasionError):
    pass


def _discounting(inst: PersuasionInstance, delta, u_bar) -> tuple[float, float]:
    delta = inst.delta if delta is None else float(delta)
    u_bar = inst.u_bar if u_bar is None else float(u_bar)
    if delta is None or u_bar is None:
        raise MissingRepeatedParameters("instance has no repeated block (delta, u_bar)")
    return delta, u_bar


def monopoly_value(inst: PersuasionInstance, x=None) -> float:
    """Sender utility from greedy play on a single posterior (the prior by default)."""
    x = inst.prior if x is None else x
    return sender_utility(inst, x, greedy_best_response(inst, x)[1])


def surplus_total(inst: PersuasionInstance) -> float:
    """Sender plus platform utility when every user buys on every recommendation."""
    return inst.mu * (1.0 + float(np.dot(inst.prior, inst.theta)))


def first_best(inst: PersuasionInstance) -> float:
    """Average user utility when the sender never lies."""
    return inst.mu * float(np.dot(inst.prior, inst.theta))


def truthful_value(
    inst: PersuasionInstance, policy: PlatformPolicy, sender_on_f: Optional[SenderPolicy] = None
) -> float:
    """Sender utility per period from truthful play, which is also its long-run value."""
    sender = truthful_strategy(inst, policy)
    if sender_on_f is not None:
        lies = np.array(sender_on_f.lies)
        if policy.truthful_index is not None:
            lies[policy.truthful_index] = 0.0
        sender = SenderPolicy(lies)
    return policy_utilities(inst, policy, sender).sender


def ic_rhs(inst: PersuasionInstance, k: int, x_t, delta=None, u_bar=None) -> float:
    """Lowest truthful value that makes lying at type ``k``'s threshold on ``x_t`` unprofitable."""
    delta, u_bar = _discounting(inst, delta, u_bar)
    tail = tail_mass(x_t, k)
    if tail <= ZERO_TAIL_TOL:
        raise ZeroTail(f"no mass at or above type {k} on the truthful posterior")
    p_k = float(inst.thresholds[k])
    odds = inst.mu / (1.0 - inst.mu)
    return (1.0 - delta) / delta * (odds * (tail - 1.0) / (tail * p_k) + 1.0) + u_bar


def is_incentive_compatible(
    inst: PersuasionInstance, policy: PlatformPolicy, delta=None, u_bar=None
) -> tuple[bool, dict[int, float]]:
    """Whether truthful play on the truthful posterior is a best response.

    Returns the verdict and the slack ``V - rhs_k`` for every type ``k`` whose
    deviation sells to someone. Without a truthful posterior the policy is
    trivially compatible.
    """
    delta, u_bar = _discounting(inst, delta, u_bar)
    if policy.truthful_index is None:
        return True, {}
    value = truthful_value(inst, policy)
    slack = {}
    for k in range(inst.n):
        try:
            slack[k] = value - ic_rhs(inst, k, policy.x_t, delta, u_bar)
        except ZeroTail:
            continue
    return all(s >= -IC_TOL for s in slack.values()), slack


def deviation_value(inst: PersuasionInstance, policy: PlatformPolicy, k: int, delta=None, u_bar=None) -> float:
    """Net normalized gain from lying at ``tau_k`` once on the truthful posterior.

    After the deviation the sender continues truthfully if not caught and
    earns ``u_bar`` forever if caught. Positive means the deviation pays.
    """
    delta, u_bar = _discounting(inst, delta, u_bar)
    if policy.truthful_index is None:
        raise PersuasionError("policy has no truthful posterior")
    tail = tail_mass(policy.x_t, k)
    if tail <= ZERO_TAIL_TOL:
        raise ZeroTail(f"no mass at or above type {k} on the truthful posterior")
    mu, p_k = inst.mu, float(inst.thresholds[k])
    value = truthful_value(inst, policy)
    caught = (1.0 - mu) * tail * p_k
    deviate = (1.0 - delta) * tail * (mu + (1.0 - mu) * p_k) + delta * (caught * u_bar + (1.0 - caught) * value)
    comply = (1.0 - delta) * mu + delta * value
    return deviate - comply


@dataclass(frozen=True)
class ClosedFormUtilities:
    """Closed-form utilities of a lowest-type-targeting policy.

    ``sender_f`` and ``platform_f`` are conditioned on a non-truthful
    posterior and are NaN when the policy is entirely truthful.
    """

    sender_f: float
    value: float
    platform_f: float
    platform: float


def closed_form_utilities(inst: PersuasionInstance, policy: PlatformPolicy) -> ClosedFormUtilities:
    if not is_lowest_type_targeting(inst, policy):
        raise NotLowestTypeTargeting("closed forms need a lowest-type-targeting policy")
    mu = inst.mu
    idx = policy.non_truthful()
    alpha = policy.weights[idx]
    lies = np.array([greedy_best_response(inst, x)[1] for x in policy.posteriors[idx]])
    weighted_lies = float(np.dot(alpha, lies)) if idx else 0.0
    rest = 1.0 - policy.alpha_t
    if idx:
        mean_theta = float(np.dot(alpha, policy.posteriors[idx] @ inst.theta))
        sender_f = mu + (1.0 - mu) / rest * weighted_lies
        platform_f = mu / rest * mean_theta - (1.0 - mu) / rest * weighted_lies
    else:
        sender_f = platform_f = math.nan
    prior = policy.mean()
    return ClosedFormUtilities(
        sender_f=sender_f,
        value=mu + (1.0 - mu) * weighted_lies,
        platform_f=platform_f,
        platform=mu * float(np.dot(prior, inst.theta)) - (1.0 - mu) * weighted_lies,
    )


@dataclass(frozen=True)
class SolverConfig:
    grid_points_per_axis: int = 32
    restarts: int = 4
    refine_tolerance: float = 1e-6
    max_refine_iters: int = 200

    def __post_init__(self):
        if self.grid_points_per_axis < 8:
            raise ValueError("grid_points_per_axis must be at least 8")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not self.refine_tolerance > 0:
            raise ValueError("refine_tolerance must be positive")
        if self.max_refine_iters < 1:
            raise ValueError("max_refine_iters must be at least 1")


@dataclass(frozen=True)
class SolveResult:
    policy: PlatformPolicy
    sender_value: float
    platform_value: float
    ic_certificate: dict = field(repr=False)
    fallback_used: bool
    mass_split: np.ndarray = field(repr=False)
    grid_points_per_axis: int = 0

    @property
    def alpha_t(self) -> float:
        return self.policy.alpha_t

    @property
    def x_t(self):
        return self.policy.x_t

    @property
    def x_f(self):
        return self.policy.x_f


class _SplitProblem:
    """Step-one objective over mass splits ``m`` (mass of each type routed to ``x_t``)."""

    def __init__(self, inst: PersuasionInstance, delta: float, u_bar: float):
        self.inst = inst
        self.delta = delta
        self.u_bar = u_bar
        self.prior = np.asarray(inst.prior)
        self.sale_values = inst.sale_values
        self.thresholds = inst.thresholds

    def evaluate(self, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Truthful value and feasibility for each row of ``m``."""
        m = np.atleast_2d(m)
        mu = self.inst.mu
        alpha = m.sum(axis=1)
        residual = np.clip(self.prior - m, 0.0, None)
        value = alpha * mu + np.max(_tails(residual) * self.sale_values, axis=1)

        active = alpha > ALPHA_TOL
        tails = _tails(m) / np.where(active, alpha, 1.0)[:, None]
        valid = active[:, None] & (tails > ZERO_TAIL_TOL)
        safe = np.where(valid, tails, 1.0)
        odds = mu / (1.0 - mu)
        rhs = (1.0 - self.delta) / self.delta * (odds * (safe - 1.0) / (safe * self.thresholds) + 1.0) + self.u_bar
        ok = np.where(valid, value[:, None] >= rhs + SEARCH_MARGIN, True)
        return value, ok.all(axis=1)

    def point(self, m: np.ndarray) -> tuple[float, bool]:
        v, ok = self.evaluate(m[None, :])
        return float(v[0]), bool(ok[0])


def _tails(a: np.ndarray) -> np.ndarray:
    return np.cumsum(a[..., ::-1], axis=-1)[..., ::-1]


def _grid_scan(problem: _SplitProblem, points: int, keep: int):
    axes = [np.linspace(0.0, x, points) for x in problem.prior]
    best_v = np.empty(0)
    best_m = np.empty((0, problem.inst.n))
    for first in axes[0]:
        rest = np.meshgrid(*axes[1:], indexing="ij") if len(axes) > 1 else []
        cols = [np.full(rest[0].size if rest else 1, first)] + [r.ravel() for r in rest]
        m = np.column_stack(cols)
        v, ok = problem.evaluate(m)
        best_v = np.concatenate([best_v, v[ok]])
        best_m = np.vstack([best_m, m[ok]])
        order = np.lexsort(tuple(best_m.T[::-1]) + (best_v,))[:keep]
        best_v, best_m = best_v[order], best_m[order]
    return best_v, best_m


def _bisect_boundary(problem: _SplitProblem, feasible: np.ndarray, infeasible: np.ndarray, cfg: SolverConfig):
    lo, hi = feasible, infeasible
    for _ in range(cfg.max_refine_iters):
        if np.max(np.abs(hi - lo)) < cfg.refine_tolerance * 1e-6:
            break
        mid = 0.5 * (lo + hi)
        if problem.point(mid)[1]:
            lo = mid
        else:
            hi = mid
    return lo


def _refine(problem: _SplitProblem, m0: np.ndarray, step: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    """Compass search over the box, then bisection onto the feasibility boundary."""
    n = m0.size
    upper = problem.prior
    best = m0.copy()
    best_v = problem.point(best)[0]
    h = step.copy()
    directions = [s * np.eye(n)[j] for j in range(n) for s in (1.0, -1.0)]
    for _ in range(cfg.max_refine_iters):
        if np.max(h) < cfg.refine_tolerance:
            break
        moved = False
        for d in directions:
            trial = np.clip(best + d * h, 0.0, upper)
            v, ok = problem.point(trial)
            if ok and v < best_v:
                best, best_v, moved = trial, v, True
        if not moved:
            h = h / 2.0

    targets = [upper.copy()]
    for signs in itertools.product((-1.0, 0.0, 1.0), repeat=n):
        if any(signs):
            targets.append(np.clip(best + np.array(signs) * step, 0.0, upper))
    for target in targets:
        v, ok = problem.point(target)
        if ok or v >= best_v:
            continue
        cand = _bisect_boundary(problem, best, target, cfg)
        cv, cok = problem.point(cand)
        if cok and cv < best_v:
            best, best_v = cand, cv
    return best


def _better(a: tuple[float, np.ndarray], b: tuple[float, np.ndarray]) -> bool:
    """Lexicographic order on (value, split) so the outcome does not depend on search order."""
    if a[0] != b[0]:
        return a[0] < b[0]
    return tuple(a[1]) < tuple(b[1])


def _policy_from_split(inst: PersuasionInstance, m: np.ndarray) -> PlatformPolicy:
    prior = np.asarray(inst.prior)
    alpha = float(np.sum(m))
    if alpha <= ALPHA_TOL:
        return solve_one_shot(inst.with_prior(prior))[0]
    x_t = m / alpha
    residual = np.clip(prior - m, 0.0, None)
    rest = 1.0 - alpha
    if rest <= ALPHA_TOL or residual.sum() <= ALPHA_TOL:
        return PlatformPolicy([1.0], [prior], truthful_index=0)
    x_f = residual / residual.sum()
    inner = solve_one_shot(inst.with_prior(x_f))[0]
    return PlatformPolicy(
        np.concatenate([[alpha], rest * inner.weights]),
        np.vstack([x_t, inner.posteriors]),
        truthful_index=0,
    )


def solve_repeated(inst: PersuasionInstance, cfg: Optional[SolverConfig] = None) -> SolveResult:
    """Platform-optimal incentive-compatible policy for the reputation game.

    Step one minimizes the sender's truthful value over splits of the prior
    into a truthful part and a remainder, valuing the remainder at its
    no-information monopoly utility, subject to incentive compatibility.
    The search is a grid scan plus local refinement from the best cells,
    always including the all-truthful corner and the no-truthful fallback.
    Step two segments the remainder consumer-optimally, which keeps the
    sender's value and hands every remaining surplus to users.
    """
    cfg = cfg or SolverConfig()
    delta, u_bar = _discounting(inst, None, None)
    problem = _SplitProblem(inst, delta, u_bar)
    prior = problem.prior
    n = inst.n

    fallback = np.zeros(n)
    best = (monopoly_value(inst), fallback)
    corner_v, corner_ok = problem.point(prior.copy())
    if corner_ok and _better((corner_v, prior.copy()), best):
        best = (corner_v, prior.copy())

    grid_v, grid_m = _grid_scan(problem, cfg.grid_points_per_axis, cfg.restarts)
    step = prior / (cfg.grid_points_per_axis - 1)
    # The fallback corner is always refined too: when the truthful mass must
    # be tiny, every other grid cell can be infeasible.
    starts = [(float(v), m) for v, m in zip(grid_v, grid_m) if np.sum(m) > ALPHA_TOL]
    starts.append((best[0], fallback))
    for v, m in starts:
        if np.sum(m) > ALPHA_TOL and _better((v, m), best):
            best = (v, m)
        refined = _refine(problem, m, step, cfg)
        rv, rok = problem.point(refined)
        if rok and _better((rv, refined), best):
            best = (rv, refined)

    split = best[1]
    policy = _policy_from_split(inst, split)
    report = policy_utilities(inst, policy)
    identity = surplus_total(inst) - report.sender
    if abs(identity - report.platform) > 1e-9:
        raise RuntimeError(
            f"platform value {report.platform:.15g} disagrees with the surplus identity {identity:.15g}"
        )
    ok, slack = is_incentive_compatible(inst, policy)
    if policy.truthful_index is not None and min(slack.values(), default=0.0) < -1e-9:
        raise RuntimeError(f"solver returned a policy violating incentive compatibility: {slack}")
    return SolveResult(
        policy=policy,
        sender_value=report.sender,
        platform_value=report.platform,
        ic_certificate=slack,
        fallback_used=policy.truthful_index is None,
        mass_split=split,
        grid_points_per_axis=cfg.grid_points_per_axis,
    )


def punishment_free_delta(inst: PersuasionInstance, u_bar: Optional[float] = None) -> float:
    """Discount factor above which full truthfulness is incentive compatible (needs ``u_bar < mu``)."""
    u_bar = inst.u_bar if u_bar is None else u_bar
    if not u_bar < inst.mu:
        raise ValueError("full truthfulness is never enforceable when u_bar >= mu")
    return 1.0 / (1.0 + inst.mu - u_bar)
