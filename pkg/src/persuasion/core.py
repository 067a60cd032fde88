"""Domain types and one-shot utilities of the persuasion platform game.

Indices are 0-based throughout the Python API: type ``k`` is ``theta[k]``.
Posteriors double as signals; the sender always recommends buying when
the product is good, so a sender strategy is one lying probability per
posterior (the probability of recommending a bad product).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from ._validation import (
    as_float_vector,
    check_index,
    frozen,
    is_simplex,
    is_strictly_increasing,
)

# Utility ties closer than this are broken toward the smaller index.
TIE_TOL = 1e-12
# A posterior coordinate at or below this counts as outside the support.
SUPPORT_TOL = 1e-12
# Tolerance for Bayes-plausibility and policy weight sums.
PLAUSIBILITY_TOL = 1e-9


class PersuasionError(ValueError):
    """Base class for invalid instances and policies."""


class NonIncreasingTheta(PersuasionError):
    pass


class PriorNotSimplex(PersuasionError):
    pass


class MuOutOfRange(PersuasionError):
    pass


class ThresholdExceedsOne(PersuasionError):
    pass


class DeltaOutOfRange(PersuasionError):
    pass


class PunishmentTooHigh(PersuasionError):
    pass


class PolicyError(PersuasionError):
    pass


class SegmentCountMismatch(PolicyError):
    pass


@dataclass(frozen=True)
class PersuasionInstance:
    """User types, prior over types and the probability of a good product.

    ``delta`` and ``u_bar`` are only needed for the repeated reputation game.
    Construction validates everything; invalid inputs raise a subclass of
    :class:`PersuasionError`.
    """

    theta: np.ndarray
    prior: np.ndarray
    mu: float
    delta: Optional[float] = None
    u_bar: Optional[float] = None

    def __post_init__(self):
        theta = as_float_vector(self.theta, "theta")
        prior = as_float_vector(self.prior, "prior")
        if prior.size != theta.size:
            raise PriorNotSimplex(
                f"prior has {prior.size} entries but theta has {theta.size}"
            )
        if theta[0] <= 0 or not is_strictly_increasing(theta):
            raise NonIncreasingTheta(f"theta must satisfy 0 < theta_1 < ... < theta_n, got {theta}")
        if not is_simplex(prior):
            raise PriorNotSimplex(f"prior must be a probability vector, got {prior}")
        mu = float(self.mu)
        if not 0.0 < mu < 1.0:
            raise MuOutOfRange(f"mu must lie in (0, 1), got {mu}")
        if mu * (1.0 + theta[-1]) > 1.0 + TIE_TOL:
            raise ThresholdExceedsOne(
                f"mu*(1+theta_n) = {mu * (1.0 + theta[-1]):.6g} > 1: the top persuasion threshold is not a probability"
            )
        object.__setattr__(self, "theta", frozen(theta))
        object.__setattr__(self, "prior", frozen(np.clip(prior, 0.0, None)))
        object.__setattr__(self, "mu", mu)

        if (self.delta is None) != (self.u_bar is None):
            raise PersuasionError("delta and u_bar must be given together")
        if self.delta is not None:
            delta = float(self.delta)
            if not 0.0 < delta < 1.0:
                raise DeltaOutOfRange(f"delta must lie in (0, 1), got {delta}")
            u_bar = float(self.u_bar)
            monopoly = sender_utility(self, self.prior, greedy_best_response(self, self.prior)[1])
            if not u_bar < monopoly - TIE_TOL:
                raise PunishmentTooHigh(
                    f"u_bar={u_bar} must be below the no-information sender utility {monopoly:.12g}"
                )
            object.__setattr__(self, "delta", delta)
            object.__setattr__(self, "u_bar", u_bar)

    @property
    def n(self) -> int:
        return self.theta.size

    @property
    def thresholds(self) -> np.ndarray:
        return persuasion_threshold(self.theta, self.mu)

    @property
    def sale_values(self) -> np.ndarray:
        """Expected sender payoff per sale when lying at each threshold."""
        return self.mu + (1.0 - self.mu) * self.thresholds

    @property
    def is_repeated(self) -> bool:
        return self.delta is not None

    def with_prior(self, prior) -> "PersuasionInstance":
        """Same types and quality prior, different user distribution (no repeated block)."""
        return PersuasionInstance(self.theta, prior, self.mu)


def validate_instance(raw) -> PersuasionInstance:
    """Build a validated instance from a mapping (file schema) or pass one through."""
    if isinstance(raw, PersuasionInstance):
        return raw
    if not isinstance(raw, Mapping):
        raise PersuasionError(f"expected a mapping, got {type(raw).__name__}")
    missing = [key for key in ("theta", "prior", "mu") if key not in raw]
    if missing:
        raise PersuasionError(f"missing field(s): {', '.join(missing)}")
    rep = raw.get("repeated")
    delta = u_bar = None
    if rep is not None:
        if not isinstance(rep, Mapping) or "delta" not in rep or "u_bar" not in rep:
            raise PersuasionError("repeated block needs both 'delta' and 'u_bar'")
        delta, u_bar = rep["delta"], rep["u_bar"]
    return PersuasionInstance(raw["theta"], raw["prior"], raw["mu"], delta, u_bar)


def persuasion_threshold(theta, mu: float):
    """Largest lying probability a user of type ``theta`` still follows."""
    if np.ndim(theta) == 0:
        return mu / (1.0 - mu) * float(theta)
    return mu / (1.0 - mu) * np.asarray(theta, dtype=np.float64)


def tail_mass(x, k: int) -> float:
    """Mass of types ``k..n-1`` in ``x``."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(x[check_index(k, x.size):]))


def _buyers(inst: PersuasionInstance, p: float) -> np.ndarray:
    return p <= inst.thresholds + TIE_TOL


def sender_utility(inst: PersuasionInstance, x, p: float) -> float:
    """Expected sales when the sender lies with probability ``p`` on posterior ``x``."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(x[_buyers(inst, p)]) * (inst.mu + (1.0 - inst.mu) * p))


def type_utilities(inst: PersuasionInstance, p: float) -> np.ndarray:
    """Expected utility of each user type facing lying probability ``p``."""
    gain = inst.mu * inst.theta - (1.0 - inst.mu) * p
    return np.where(_buyers(inst, p), gain, 0.0)


@dataclass(frozen=True)
class UtilityReport:
    sender: float
    platform: float
    per_type: np.ndarray = field(repr=False)


def platform_utility(inst: PersuasionInstance, x, p: float) -> UtilityReport:
    x = np.asarray(x, dtype=np.float64)
    per_type = type_utilities(inst, p)
    return UtilityReport(
        sender=sender_utility(inst, x, p),
        platform=float(np.dot(x, per_type)),
        per_type=frozen(per_type),
    )


def greedy_best_response(inst: PersuasionInstance, x) -> tuple[int, float]:
    """Index of the type the myopic sender targets on ``x`` and its lying probability.

    Among near-ties the lowest type wins.
    """
    x = np.asarray(x, dtype=np.float64)
    tails = np.cumsum(x[::-1])[::-1]
    payoff = tails * inst.sale_values
    k = int(np.flatnonzero(payoff >= payoff.max() - TIE_TOL)[0])
    return k, float(inst.thresholds[k])


def support_min(x) -> int:
    return int(np.flatnonzero(np.asarray(x) > SUPPORT_TOL)[0])


@dataclass(frozen=True)
class PlatformPolicy:
    """Finite distribution over posteriors, optionally with one truthful posterior.

    ``posteriors`` has one row per segment. Segments with zero weight are
    dropped on construction (the truthful index is remapped accordingly).
    """

    weights: np.ndarray
    posteriors: np.ndarray
    truthful_index: Optional[int] = None

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        post = np.atleast_2d(np.asarray(self.posteriors, dtype=np.float64))
        if post.shape[0] != w.size:
            raise SegmentCountMismatch(f"{w.size} weights for {post.shape[0]} posteriors")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise PolicyError("segment weights must be finite and nonnegative")
        keep = w > 0
        t = self.truthful_index
        if t is not None:
            t = int(t)
            if not 0 <= t < w.size:
                raise PolicyError(f"truthful_index {t} out of range")
            t = int(np.sum(keep[:t])) if keep[t] else None
        w, post = w[keep], post[keep]
        if w.size == 0:
            raise PolicyError("policy has no segment with positive weight")
        if abs(float(np.sum(w)) - 1.0) > PLAUSIBILITY_TOL:
            raise PolicyError(f"segment weights sum to {np.sum(w):.15g}, not 1")
        for row in post:
            if not is_simplex(row, PLAUSIBILITY_TOL):
                raise PolicyError(f"posterior {row} is not a probability vector")
        object.__setattr__(self, "weights", frozen(w))
        object.__setattr__(self, "posteriors", frozen(post))
        object.__setattr__(self, "truthful_index", t)

    @property
    def m(self) -> int:
        return self.weights.size

    def mean(self) -> np.ndarray:
        return self.weights @ self.posteriors

    def is_bayes_plausible(self, prior, tol: float = PLAUSIBILITY_TOL) -> bool:
        prior = np.asarray(prior, dtype=np.float64)
        return prior.shape == self.mean().shape and bool(np.max(np.abs(self.mean() - prior)) <= tol)

    @property
    def alpha_t(self) -> float:
        return 0.0 if self.truthful_index is None else float(self.weights[self.truthful_index])

    @property
    def x_t(self) -> Optional[np.ndarray]:
        return None if self.truthful_index is None else self.posteriors[self.truthful_index]

    def non_truthful(self) -> list[int]:
        return [i for i in range(self.m) if i != self.truthful_index]

    @property
    def x_f(self) -> Optional[np.ndarray]:
        """Weight-renormalized mean of the non-truthful segments (None if there are none)."""
        idx = self.non_truthful()
        if not idx:
            return None
        w = self.weights[idx]
        return (w @ self.posteriors[idx]) / np.sum(w)

    def restricted(self) -> Optional["PlatformPolicy"]:
        """The policy conditioned on a non-truthful posterior."""
        idx = self.non_truthful()
        if not idx:
            return None
        w = self.weights[idx]
        return PlatformPolicy(w / np.sum(w), self.posteriors[idx])


@dataclass(frozen=True)
class SenderPolicy:
    """Lying probability per segment of a platform policy."""

    lies: np.ndarray

    def __post_init__(self):
        lies = np.atleast_1d(np.asarray(self.lies, dtype=np.float64))
        if np.any(lies < 0) or np.any(lies > 1):
            raise PolicyError(f"lying probabilities must lie in [0, 1], got {lies}")
        object.__setattr__(self, "lies", frozen(lies))


def greedy_strategy(inst: PersuasionInstance, policy: PlatformPolicy) -> SenderPolicy:
    return SenderPolicy([greedy_best_response(inst, x)[1] for x in policy.posteriors])


def truthful_strategy(inst: PersuasionInstance, policy: PlatformPolicy) -> SenderPolicy:
    """Greedy everywhere except zero lying on the truthful posterior."""
    lies = np.array(greedy_strategy(inst, policy).lies)
    if policy.truthful_index is not None:
        lies[policy.truthful_index] = 0.0
    return SenderPolicy(lies)


def policy_utilities(
    inst: PersuasionInstance, policy: PlatformPolicy, sender: Optional[SenderPolicy] = None
) -> UtilityReport:
    """Weight-averaged utilities of ``policy`` against ``sender``.

    Without an explicit sender strategy the truthful strategy is used, which
    is plain greedy play when no truthful posterior is designated.
    ``per_type[j]`` is the expected utility of a type-j user, averaged over
    the segments that type lands in.
    """
    if sender is None:
        sender = truthful_strategy(inst, policy)
    if sender.lies.size != policy.m:
        raise SegmentCountMismatch(f"{sender.lies.size} lying probabilities for {policy.m} segments")
    s_total = 0.0
    p_total = 0.0
    type_mass = np.zeros(inst.n)
    for w, x, p in zip(policy.weights, policy.posteriors, sender.lies):
        rep = platform_utility(inst, x, p)
        s_total += w * rep.sender
        p_total += w * rep.platform
        type_mass += w * x * rep.per_type
    mean = policy.mean()
    per_type = np.divide(type_mass, mean, out=np.zeros(inst.n), where=mean > SUPPORT_TOL)
    return UtilityReport(float(s_total), float(p_total), frozen(per_type))


def is_lowest_type_targeting(inst: PersuasionInstance, policy: PlatformPolicy) -> bool:
    """True iff the greedy sender targets the lowest supported type on every non-truthful segment."""
    return all(
        greedy_best_response(inst, policy.posteriors[i])[0] == support_min(policy.posteriors[i])
        for i in policy.non_truthful()
    )


def _split_until_lowest(inst: PersuasionInstance, weight: float, x: np.ndarray):
    j, _ = greedy_best_response(inst, x)
    if j == support_min(x):
        return [(weight, x)], 0
    upper = tail_mass(x, j)
    idx = np.arange(inst.n)
    y = np.where(idx >= j, x, 0.0) / upper
    z = np.where(idx < j, x, 0.0) / (1.0 - upper)
    top, s_top = _split_until_lowest(inst, weight * upper, y)
    bottom, s_bottom = _split_until_lowest(inst, weight * (1.0 - upper), z)
    return top + bottom, 1 + s_top + s_bottom


def improve_to_lowest_type_targeting(inst: PersuasionInstance, policy: PlatformPolicy) -> PlatformPolicy:
    """Split every non-lowest-type-targeting segment until the policy is lowest-type-targeting.

    A segment whose greedy target ``j`` sits above its lowest type is cut into
    the part at or above ``j`` (still targeted at ``j``) and the part below
    ``j``, which is then processed again. The truthful segment is untouched.
    """
    weights: list[float] = []
    rows: list[np.ndarray] = []
    truthful = None
    total_splits = 0
    for i, (w, x) in enumerate(zip(policy.weights, policy.posteriors)):
        if i == policy.truthful_index:
            truthful = len(weights)
            weights.append(w)
            rows.append(x)
            continue
        pieces, splits = _split_until_lowest(inst, w, x)
        total_splits += splits
        for pw, px in pieces:
            weights.append(pw)
            rows.append(px)
    assert total_splits <= inst.n * policy.m
    if total_splits == 0:
        return policy
    return PlatformPolicy(np.array(weights), np.array(rows), truthful)


def full_revelation_policy(inst: PersuasionInstance) -> PlatformPolicy:
    support = np.flatnonzero(inst.prior > 0)
    return PlatformPolicy(inst.prior[support], np.eye(inst.n)[support])


def single_segment_policy(inst: PersuasionInstance, truthful: bool = False) -> PlatformPolicy:
    return PlatformPolicy([1.0], [inst.prior], 0 if truthful else None)


__all__ = [
    "PersuasionInstance",
    "PlatformPolicy",
    "SenderPolicy",
    "UtilityReport",
    "validate_instance",
    "persuasion_threshold",
    "tail_mass",
    "sender_utility",
    "platform_utility",
    "type_utilities",
    "greedy_best_response",
    "greedy_strategy",
    "truthful_strategy",
    "policy_utilities",
    "is_lowest_type_targeting",
    "improve_to_lowest_type_targeting",
    "full_revelation_policy",
    "single_segment_policy",
]
