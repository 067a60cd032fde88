"""Random instance, policy and market generators shared by the test suites."""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from persuasion.core import PersuasionInstance, PlatformPolicy, greedy_best_response, sender_utility
from persuasion.segmentation import Market

THETA_A = [0.2, 0.8]
PRIOR_A = [0.2, 0.8]
MU_A = 0.5


def instance_a(delta=None, u_bar=None) -> PersuasionInstance:
    return PersuasionInstance(THETA_A, PRIOR_A, MU_A, delta, u_bar)


def random_simplex(rng: np.random.Generator, n: int, sparsity: float = 0.2) -> np.ndarray:
    x = rng.dirichlet(np.ones(n))
    drop = rng.random(n) < sparsity
    if drop.all():
        drop[rng.integers(n)] = False
    x[drop] = 0.0
    return x / x.sum()


def random_theta(rng: np.random.Generator, n: int, mu: float) -> np.ndarray:
    top = 1.0 / mu - 1.0
    while True:
        theta = np.sort(rng.uniform(0.01, top, n))
        if np.all(np.diff(theta) > 1e-6):
            return theta


def random_instance(rng: np.random.Generator, n=None, repeated: bool = False, sparsity: float = 0.2) -> PersuasionInstance:
    n = int(rng.choice([2, 3, 4])) if n is None else n
    mu = float(rng.uniform(0.1, 0.5))
    theta = random_theta(rng, n, mu)
    prior = random_simplex(rng, n, sparsity)
    if not repeated:
        return PersuasionInstance(theta, prior, mu)
    base = PersuasionInstance(theta, prior, mu)
    monopoly = sender_utility(base, prior, greedy_best_response(base, prior)[1])
    return PersuasionInstance(theta, prior, mu, float(rng.uniform(0.05, 0.99)), float(rng.uniform(0.0, 0.999) * monopoly))


def random_policy(rng: np.random.Generator, n: int, max_segments: int = 4, truthful: bool = False) -> PlatformPolicy:
    m = int(rng.integers(1, max_segments + 1))
    weights = rng.dirichlet(np.ones(m))
    rows = np.array([random_simplex(rng, n, 0.3) for _ in range(m)])
    return PlatformPolicy(weights, rows, int(rng.integers(m)) if truthful else None)


def instance_for_policy(inst: PersuasionInstance, policy: PlatformPolicy, delta=None, u_bar=None) -> PersuasionInstance:
    """Same structural parameters as ``inst`` with the prior set to the policy's mean."""
    prior = np.clip(policy.mean(), 0.0, None)
    return PersuasionInstance(inst.theta, prior / prior.sum(), inst.mu, delta, u_bar)


def random_market(rng: np.random.Generator, n=None, sparsity: float = 0.2) -> Market:
    n = int(rng.choice([2, 3, 4])) if n is None else n
    while True:
        values = np.sort(rng.uniform(0.05, 2.0, n))
        if np.all(np.diff(values) > 1e-6):
            return Market(values, random_simplex(rng, n, sparsity))


@st.composite
def instances(draw, min_n: int = 2, max_n: int = 4, repeated: bool = False):
    n = draw(st.integers(min_n, max_n))
    mu = draw(st.floats(0.1, 0.5))
    top = 1.0 / mu - 1.0
    steps = draw(st.lists(st.floats(0.02, 1.0), min_size=n, max_size=n))
    theta = np.cumsum(steps)
    theta = theta / theta[-1] * top * draw(st.floats(0.3, 1.0))
    raw = draw(st.lists(st.one_of(st.just(0.0), st.floats(0.01, 1.0)), min_size=n, max_size=n).filter(lambda v: sum(v) > 0))
    prior = np.asarray(raw) / sum(raw)
    if not repeated:
        return PersuasionInstance(theta, prior, mu)
    base = PersuasionInstance(theta, prior, mu)
    monopoly = sender_utility(base, prior, greedy_best_response(base, prior)[1])
    delta = draw(st.floats(0.05, 0.99))
    u_bar = draw(st.floats(0.0, 0.999)) * monopoly
    return PersuasionInstance(theta, prior, mu, delta, u_bar)


@st.composite
def posteriors(draw, n: int):
    raw = draw(st.lists(st.one_of(st.just(0.0), st.floats(0.01, 1.0)), min_size=n, max_size=n).filter(lambda v: sum(v) > 0))
    return np.asarray(raw) / sum(raw)


@st.composite
def markets(draw, min_n: int = 1, max_n: int = 4):
    n = draw(st.integers(min_n, max_n))
    steps = draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))
    values = np.cumsum(steps)
    return Market(values, draw(posteriors(n)))


@st.composite
def policies(draw, n: int, max_segments: int = 4, truthful: bool = False):
    m = draw(st.integers(1, max_segments))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=m, max_size=m))
    weights = np.asarray(raw) / sum(raw)
    rows = np.array([draw(posteriors(n)) for _ in range(m)])
    t = draw(st.integers(0, m - 1)) if truthful else None
    return PlatformPolicy(weights, rows, t)
