"""Estimator-style wrappers around the solvers.

The "data" an estimator is fitted on is the prior over user types; the
structural parameters (types, quality prior, discounting) are hyperparameters
so they take part in ``get_params``/``set_params``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .core import PersuasionInstance, policy_utilities, truthful_strategy
from .reduction import solve_one_shot
from .repeated import SolverConfig, solve_repeated


class OneShotPlatform(BaseEstimator):
    """User-optimal disclosure policy against a myopic greedy sender.

    Parameters
    ----------
    theta : array-like of shape (n_types,)
        Strictly increasing user gains from a good product.
    mu : float
        Prior probability that the product is good.

    Attributes
    ----------
    instance_ : PersuasionInstance
    policy_ : PlatformPolicy
    sender_policy_ : SenderPolicy
    utilities_ : UtilityReport
    """

    def __init__(self, theta=(0.2, 0.8), mu=0.5):
        self.theta = theta
        self.mu = mu

    def _instance(self, prior) -> PersuasionInstance:
        return PersuasionInstance(np.asarray(self.theta, dtype=float), np.asarray(prior, dtype=float).ravel(), self.mu)

    def fit(self, prior, y=None):
        self.instance_ = self._instance(prior)
        self.policy_, self.sender_policy_, self.utilities_ = solve_one_shot(self.instance_)
        return self

    def score(self, prior=None, y=None) -> float:
        """Average user utility of the fitted policy."""
        return float(self.utilities_.platform)


class RepeatedPlatform(BaseEstimator):
    """User-optimal policy when the sender cares about its reputation.

    Parameters
    ----------
    theta, mu : see ``OneShotPlatform``.
    delta : float
        Sender discount factor in (0, 1).
    u_bar : float
        Sender per-period utility once its reputation is lost.
    grid_points_per_axis, restarts : int
        Search settings passed to ``SolverConfig``.
    """

    def __init__(self, theta=(0.2, 0.8), mu=0.5, delta=0.9, u_bar=0.3, grid_points_per_axis=32, restarts=4):
        self.theta = theta
        self.mu = mu
        self.delta = delta
        self.u_bar = u_bar
        self.grid_points_per_axis = grid_points_per_axis
        self.restarts = restarts

    def fit(self, prior, y=None):
        self.instance_ = PersuasionInstance(
            np.asarray(self.theta, dtype=float),
            np.asarray(prior, dtype=float).ravel(),
            self.mu,
            self.delta,
            self.u_bar,
        )
        cfg = SolverConfig(grid_points_per_axis=self.grid_points_per_axis, restarts=self.restarts)
        self.result_ = solve_repeated(self.instance_, cfg)
        self.policy_ = self.result_.policy
        self.sender_policy_ = truthful_strategy(self.instance_, self.policy_)
        self.utilities_ = policy_utilities(self.instance_, self.policy_, self.sender_policy_)
        return self

    def score(self, prior=None, y=None) -> float:
        return float(self.result_.platform_value)
