import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import instance_a, instances, posteriors
from persuasion.core import (
    PersuasionInstance,
    full_revelation_policy,
    greedy_strategy,
    is_lowest_type_targeting,
    platform_utility,
    single_segment_policy,
)
from persuasion.reduction import (
    PriceBelowMu,
    check_reduction_identity,
    lie_to_price,
    price_to_lie,
    pull_back,
    solve_one_shot,
    to_market,
)
from persuasion.repeated import monopoly_value
from persuasion.segmentation import bbm_segmentation, full_revelation_segmentation, surpluses, uniform_segmentation

B = PersuasionInstance([0.2, 0.6], [0.5, 0.5], 0.5)


def test_to_market_examples():
    m = to_market(instance_a()).market
    np.testing.assert_allclose(m.values, [0.6, 0.9])
    np.testing.assert_allclose(m.masses, [0.2, 0.8])
    np.testing.assert_allclose(to_market(B).market.values, [0.6, 0.8])


def test_price_lie_conversion():
    assert price_to_lie(0.6, 0.5) == pytest.approx(0.2)
    assert lie_to_price(0.0, 0.3) == 0.3
    with pytest.raises(PriceBelowMu):
        price_to_lie(0.2, 0.5)


@given(st.floats(0.0, 1.0), st.floats(0.01, 0.99))
def test_price_lie_round_trip(p, mu):
    assert price_to_lie(lie_to_price(p, mu), mu) == pytest.approx(p, abs=1e-12)


@given(instances())
def test_values_minus_mu_are_scaled_thresholds(inst):
    np.testing.assert_allclose(to_market(inst).market.values - inst.mu, (1 - inst.mu) * inst.thresholds, atol=1e-15)


def test_pull_back_of_instance_a_segmentation():
    inst = instance_a()
    rmap = to_market(inst)
    seg = bbm_segmentation(rmap.market)
    policy, sender = pull_back(seg, rmap)
    np.testing.assert_allclose(policy.weights, [0.6, 0.4])
    np.testing.assert_allclose(sender.lies, [0.2, 0.8])
    s = surpluses(seg)
    us = sum(w * platform_utility(inst, x, p).sender for w, x, p in zip(policy.weights, policy.posteriors, sender.lies))
    assert us == pytest.approx(s.producer, abs=1e-12)


def test_pull_back_of_reference_segmentations():
    inst = instance_a()
    rmap = to_market(inst)
    policy, sender = pull_back(uniform_segmentation(rmap.market), rmap)
    assert policy.m == 1 and sender.lies[0] == pytest.approx(0.8)
    policy, sender = pull_back(full_revelation_segmentation(rmap.market), rmap)
    np.testing.assert_allclose(policy.posteriors, full_revelation_policy(inst).posteriors)
    np.testing.assert_allclose(sender.lies, inst.thresholds)


def test_solve_one_shot_examples():
    _, _, rep = solve_one_shot(instance_a())
    assert (rep.platform, rep.sender) == (pytest.approx(0.12, abs=1e-9), pytest.approx(0.72, abs=1e-9))
    _, _, rep = solve_one_shot(B)
    assert (rep.platform, rep.sender) == (pytest.approx(0.1, abs=1e-9), pytest.approx(0.6, abs=1e-9))
    _, _, rep = solve_one_shot(PersuasionInstance([0.7], [1.0], 0.4))
    assert rep.platform == pytest.approx(0.0, abs=1e-12)
    assert rep.sender == pytest.approx(0.4 * 1.7)


def test_reduction_identity_examples():
    assert check_reduction_identity([0.2, 0.8], 0.8, to_market(instance_a()))
    assert check_reduction_identity([0.5, 0.5], 0.2, to_market(B))
    assert check_reduction_identity([0.3, 0.7], 0.0, to_market(B))


@given(instances(), st.data())
def test_reduction_identity_on_random_inputs(inst, data):
    x = data.draw(posteriors(inst.n))
    rmap = to_market(inst)
    for p in np.concatenate([[0.0], inst.thresholds]):
        assert check_reduction_identity(x, p, rmap)


@given(instances())
def test_one_shot_solution_properties(inst):
    policy, sender, rep = solve_one_shot(inst)
    assert policy.is_bayes_plausible(inst.prior, 1e-9)
    assert is_lowest_type_targeting(inst, policy)
    np.testing.assert_array_equal(sender.lies, greedy_strategy(inst, policy).lies)
    assert rep.sender == pytest.approx(monopoly_value(inst), abs=1e-9)
    single = platform_utility(inst, inst.prior, greedy_strategy(inst, single_segment_policy(inst)).lies[0])
    assert rep.platform >= single.platform - 1e-9
