import numpy as np
import pytest

from helpers import instance_a, random_instance
from persuasion import oracle
from persuasion.core import platform_utility


def test_enumeration_examples():
    inst = instance_a()
    rep = oracle.enumerate_one_shot_utilities(inst, [1.0, 0.0], 0.0)
    assert rep.sender == pytest.approx(0.5)
    assert rep.per_type[0] == pytest.approx(0.5 * 0.2)
    assert oracle.enumerate_one_shot_utilities(inst, [0.2, 0.8], 0.8).sender == pytest.approx(0.72)


def test_enumeration_matches_closed_form_on_random_draws(rng):
    for _ in range(1000):
        inst = random_instance(rng)
        x = rng.dirichlet(np.ones(inst.n))
        p = float(rng.choice(np.concatenate([[0.0], inst.thresholds])))
        a, b = platform_utility(inst, x, p), oracle.enumerate_one_shot_utilities(inst, x, p)
        assert abs(a.sender - b.sender) <= 1e-12 and abs(a.platform - b.platform) <= 1e-12


def test_grid_segmentation_search_examples():
    assert oracle.grid_segmentation_search([0.6, 0.9], [0.2, 0.8]) <= 0.12 + 1e-3
    assert oracle.grid_segmentation_search([0.6, 0.9], [0.2, 0.8]) >= 0.12 - 1e-2
    assert oracle.grid_segmentation_search([0.6, 0.9], [0.0, 1.0]) == 0.0
    assert oracle.grid_segmentation_search([0.6, 0.8], [0.5, 0.5]) <= 0.1 + 1e-3
    three = oracle.grid_segmentation_search([0.6, 0.9], [0.2, 0.8], oracle.GridSpec(resolution=12, max_segments=3))
    assert three <= 0.12 + 1e-3


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        oracle.GridSpec(resolution=4)
    with pytest.raises(ValueError):
        oracle.GridSpec(max_segments=4)


@pytest.mark.parametrize(
    "delta, u_bar, platform, alpha",
    [(0.9, 0.3, 0.34, 1.0), (0.5, 0.45, 0.12, 0.0), (0.75, 0.3, 0.2067, None)],
)
def test_grid_repeated_search_examples(delta, u_bar, platform, alpha):
    res = oracle.grid_repeated_search(instance_a(delta, u_bar))
    assert res.platform == pytest.approx(platform, abs=1e-3)
    if alpha is not None:
        assert res.alpha == pytest.approx(alpha)


@pytest.mark.parametrize("delta, u_bar, expected", [(0.9, 0.3, 0.5), (0.75, 0.3, 0.63333333), (0.5, 0.45, 0.72)])
def test_analytic_v_star_examples(delta, u_bar, expected):
    assert oracle.analytic_v_star(instance_a(delta, u_bar)) == pytest.approx(expected, abs=1e-6)


def test_analytic_candidate_agrees_with_grid_on_random_small_instances(rng):
    for i in range(30):
        n = 2 if i < 20 else 3
        resolution = 400 if n == 2 else 60
        inst = random_instance(rng, n=n, repeated=True)
        grid = oracle.grid_repeated_search(inst, oracle.GridSpec(resolution=resolution))
        assert abs(grid.value - oracle.analytic_v_star(inst)) <= 2.0 / (resolution - 1)
