"""Monte Carlo simulation of the repeated reputation game.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence``; every draw is an inverse-CDF transform of ``Generator.random``
so trajectories are reproducible across platforms and numpy versions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    PLAUSIBILITY_TOL,
    TIE_TOL,
    PersuasionError,
    PersuasionInstance,
    PlatformPolicy,
    SenderPolicy,
)
from .repeated import ZERO_TAIL_TOL, ZeroTail, tail_mass

HIGH, LOW = "H", "L"


class InconsistentPolicy(PersuasionError):
    pass


def rng_stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def split_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent child streams for parallel replications."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


@dataclass(frozen=True)
class SimConfig:
    periods: int
    seed: int = 0
    deviate_at: Optional[int] = None  # None means truthful play on the truthful posterior
    record: bool = True

    def __post_init__(self):
        if self.periods < 1:
            raise ValueError("periods must be at least 1")


@dataclass(frozen=True)
class Trajectory:
    theta: np.ndarray
    segment: np.ndarray
    good: np.ndarray
    recommend: np.ndarray
    buy: np.ndarray
    high: np.ndarray

    def records(self):
        for t in range(self.theta.size):
            yield {
                "period": t,
                "theta": int(self.theta[t]),
                "segment": int(self.segment[t]),
                "omega": int(self.good[t]),
                "rec": int(self.recommend[t]),
                "action": int(self.buy[t]),
                "rep": HIGH if self.high[t] else LOW,
            }


@dataclass(frozen=True)
class SimReport:
    periods: int
    discounted_sender_utility: Optional[float]
    discount_tail_bound: Optional[float]
    avg_sender_utility: float
    avg_sender_utility_se: float
    avg_user_utility: float
    avg_user_utility_se: float
    punishment_period: Optional[int]
    trajectory: Optional[Trajectory] = field(default=None, repr=False)


def _checked_lies(inst: PersuasionInstance, policy: PlatformPolicy, sender: SenderPolicy, deviate_at):
    if sender.lies.size != policy.m:
        raise InconsistentPolicy(f"{sender.lies.size} lying probabilities for {policy.m} segments")
    if policy.posteriors.shape[1] != inst.n:
        raise InconsistentPolicy("policy posteriors do not match the number of types")
    if not policy.is_bayes_plausible(inst.prior, PLAUSIBILITY_TOL):
        raise InconsistentPolicy("policy does not average to the instance prior")
    lies = np.array(sender.lies)
    t = policy.truthful_index
    if deviate_at is not None:
        if t is None:
            raise InconsistentPolicy("cannot deviate without a truthful posterior")
        lies[t] = inst.thresholds[int(deviate_at)]
    elif t is not None:
        lies[t] = 0.0
    return lies


def _conditional_segments(inst: PersuasionInstance, policy: PlatformPolicy) -> np.ndarray:
    """Cumulative law of the segment given the type, one row per type."""
    joint = policy.weights[None, :] * policy.posteriors.T
    mass = joint.sum(axis=1, keepdims=True)
    cond = np.divide(joint, mass, out=np.full_like(joint, 1.0 / policy.m), where=mass > 0)
    return np.cumsum(cond, axis=1)


def _draw(rng: np.random.Generator, cum: np.ndarray, size) -> np.ndarray:
    """Inverse-CDF categorical draws; ``cum`` is a cumulative row or one row per draw."""
    u = rng.random(size)
    if cum.ndim == 1:
        return np.minimum(np.searchsorted(cum, u, side="right"), cum.size - 1)
    return np.minimum((u[..., None] >= cum).sum(axis=-1), cum.shape[-1] - 1)


def _high_state_periods(inst, policy, lies, periods, rng):
    theta = _draw(rng, np.cumsum(inst.prior), periods)
    segment = _draw(rng, _conditional_segments(inst, policy)[theta], periods)
    good = rng.random(periods) < inst.mu
    lie = lies[segment]
    recommend = good | (rng.random(periods) < lie)
    buy = recommend & (lie <= inst.thresholds[theta] + TIE_TOL)
    return theta, segment, good, recommend, buy


def _se(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan


def simulate(
    inst: PersuasionInstance, policy: PlatformPolicy, sender: SenderPolicy, cfg: SimConfig
) -> SimReport:
    """Play ``cfg.periods`` rounds starting from a high reputation.

    Each round draws a user type, a segment from its conditional law given
    the type, and the product quality; the sender recommends per its lying
    probability and the user buys iff recommended and the lie rate is within
    its threshold. A bought bad product on the truthful segment drops the
    reputation to low for good, after which the sender earns ``u_bar`` and
    users get nothing.
    """
    lies = _checked_lies(inst, policy, sender, cfg.deviate_at)
    rng = rng_stream(cfg.seed)
    T = cfg.periods
    theta, segment, good, recommend, buy = _high_state_periods(inst, policy, lies, T, rng)

    if policy.truthful_index is None:
        trigger = np.zeros(T, dtype=bool)
    else:
        trigger = (segment == policy.truthful_index) & ~good & buy
    hits = np.flatnonzero(trigger)
    punished_at = int(hits[0]) if hits.size else None
    high = np.ones(T, dtype=bool)
    if punished_at is not None:
        high[punished_at + 1:] = False
        recommend = recommend & high
        buy = buy & high

    u_bar = inst.u_bar if inst.u_bar is not None else 0.0
    sender_u = np.where(high, buy.astype(float), u_bar)
    user_u = np.where(buy, np.where(good, inst.theta[theta], -1.0), 0.0)

    discounted = tail = None
    if inst.delta is not None:
        d = inst.delta
        discounted = (1.0 - d) * math.fsum(sender_u * d ** np.arange(T))
        tail = d ** T
    trajectory = None
    if cfg.record:
        trajectory = Trajectory(theta, segment, good, recommend, buy, high)
    return SimReport(
        periods=T,
        discounted_sender_utility=discounted,
        discount_tail_bound=tail,
        avg_sender_utility=math.fsum(sender_u) / T,
        avg_sender_utility_se=_se(sender_u),
        avg_user_utility=math.fsum(user_u) / T,
        avg_user_utility_se=_se(user_u),
        punishment_period=punished_at,
        trajectory=trajectory,
    )


def dump_trajectory(report: SimReport, path) -> None:
    """Write one JSON record per period."""
    if report.trajectory is None:
        raise ValueError("report was produced without recording")
    with open(path, "w", encoding="utf-8") as fh:
        for rec in report.trajectory.records():
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def punishment_hazard(
    inst: PersuasionInstance, policy: PlatformPolicy, sender: SenderPolicy, k: int, periods: int, seed: int
) -> tuple[float, float]:
    """Per-period punishment probability while high, when lying at ``tau_k`` on the truthful posterior.

    Replications are run back to back: every punishment ends one replication
    and the next period starts a fresh one at high reputation. Returns the
    trigger rate and its standard error.
    """
    lies = _checked_lies(inst, policy, sender, k)
    rng = rng_stream(seed)
    theta, segment, good, recommend, buy = _high_state_periods(inst, policy, lies, periods, rng)
    trigger = ((segment == policy.truthful_index) & ~good & buy).astype(float)
    return float(trigger.mean()), _se(trigger)


def _horizon(delta: float, tol: float = 1e-10, cap: int = 20000) -> int:
    return int(min(cap, math.ceil(math.log(tol) / math.log(delta))))


def _truthful_continuation(inst, policy, lies, runs, horizon, rng, chunk: int = 20000):
    """Normalized discounted sender utility of truthful play, one value per run."""
    weights = (1.0 - inst.delta) * inst.delta ** np.arange(horizon)
    out = np.empty(runs)
    for start in range(0, runs, chunk):
        size = min(chunk, runs - start)
        _, _, _, _, buy = _high_state_periods(inst, policy, lies, size * horizon, rng)
        out[start:start + size] = buy.reshape(size, horizon).astype(float) @ weights
    return out


def estimate_truthful_value(
    inst: PersuasionInstance, policy: PlatformPolicy, sender: SenderPolicy, runs: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimate of the discounted value of truthful play, with its standard error."""
    if inst.delta is None:
        raise PersuasionError("instance has no discount factor")
    lies = _checked_lies(inst, policy, sender, None)
    values = _truthful_continuation(inst, policy, lies, runs, _horizon(inst.delta), rng_stream(seed))
    return float(values.mean()), _se(values)


def estimate_deviation_gain(
    inst: PersuasionInstance,
    policy: PlatformPolicy,
    sender: SenderPolicy,
    k: int,
    runs: int,
    seed: int,
    delta: Optional[float] = None,
    u_bar: Optional[float] = None,
) -> tuple[float, float]:
    """Monte Carlo gain of lying once at ``tau_k`` on the truthful posterior, versus complying.

    Each run draws one user from the truthful posterior and one quality;
    both branches share these draws and the simulated truthful continuation.
    Returns the mean gain and its standard error.
    """
    if delta is not None or u_bar is not None:
        inst = PersuasionInstance(
            inst.theta, inst.prior, inst.mu,
            inst.delta if delta is None else delta,
            inst.u_bar if u_bar is None else u_bar,
        )
    if inst.delta is None:
        raise PersuasionError("instance has no discount factor")
    if policy.truthful_index is None:
        raise PersuasionError("policy has no truthful posterior")
    if tail_mass(policy.x_t, k) <= ZERO_TAIL_TOL:
        raise ZeroTail(f"no mass at or above type {k} on the truthful posterior")
    d = inst.delta
    truthful_lies = _checked_lies(inst, policy, sender, None)
    rng = rng_stream(seed)

    theta = _draw(rng, np.cumsum(policy.x_t), runs)
    good = rng.random(runs) < inst.mu
    p_k = float(inst.thresholds[k])
    rec = good | (rng.random(runs) < p_k)
    buy_dev = rec & (p_k <= inst.thresholds[theta] + TIE_TOL)
    caught = buy_dev & ~good
    continuation = _truthful_continuation(inst, policy, truthful_lies, runs, _horizon(d), rng)

    gain = (1.0 - d) * (buy_dev.astype(float) - good.astype(float)) + d * caught * (inst.u_bar - continuation)
    return float(gain.mean()), _se(gain)
