import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import markets
from persuasion import oracle
from persuasion.segmentation import (
    Market,
    MarketError,
    bbm_segmentation,
    extremal_market,
    full_revelation_segmentation,
    is_price_optimal,
    optimal_uniform_price,
    pareto_mix,
    revenue,
    surplus_triangle,
    surpluses,
    uniform_segmentation,
)

M1 = Market([0.6, 0.9], [0.2, 0.8])
M2 = Market([0.6, 0.8], [0.5, 0.5])


def test_revenue_examples():
    assert revenue(M1, 1) == pytest.approx(0.72)
    assert revenue(M2, 0) == pytest.approx(0.6)
    assert revenue(Market([0.6, 0.9], [0.0, 1.0]), 1) == pytest.approx(0.9)


def test_optimal_uniform_price_examples():
    assert optimal_uniform_price(M1) == 1
    assert optimal_uniform_price(M2) == 0
    assert optimal_uniform_price(Market([1.0, 2.0], [0.5, 0.5])) == 0


def test_extremal_market_examples():
    np.testing.assert_allclose(extremal_market([0.6, 0.9], [0, 1]).masses, [1 / 3, 2 / 3])
    np.testing.assert_allclose(extremal_market([0.6, 0.8], [0, 1]).masses, [0.25, 0.75])
    np.testing.assert_allclose(extremal_market([0.6, 0.8, 1.0], [1]).masses, [0.0, 1.0, 0.0])


def test_bbm_segmentation_instance_a_market():
    seg = bbm_segmentation(M1)
    np.testing.assert_allclose(seg.weights, [0.6, 0.4])
    np.testing.assert_allclose(seg.masses, [[1 / 3, 2 / 3], [0.0, 1.0]])
    np.testing.assert_allclose(seg.prices, [0.6, 0.9])
    s = surpluses(seg)
    assert (s.consumer, s.producer, s.total) == (pytest.approx(0.12), pytest.approx(0.72), pytest.approx(0.84))


def test_bbm_segmentation_point_mass_is_the_market_itself():
    seg = bbm_segmentation(Market([0.6, 0.9], [0.0, 1.0]))
    assert seg.m == 1 and seg.prices[0] == pytest.approx(0.9)
    assert surpluses(seg).consumer == 0.0


def test_bbm_segmentation_when_aggregate_already_prices_lowest():
    # The aggregate is priced at the lowest value, yet peeling still produces
    # the extremal piece (0.25, 0.75) and a point mass; both are priced at 0.6.
    seg = bbm_segmentation(M2)
    np.testing.assert_allclose(seg.weights, [2 / 3, 1 / 3])
    np.testing.assert_allclose(seg.prices, [0.6, 0.6])
    assert surpluses(seg).consumer == pytest.approx(0.1)


def test_reference_segmentations():
    s = surpluses(uniform_segmentation(M1))
    assert (s.consumer, s.producer, s.total) == (pytest.approx(0.0), pytest.approx(0.72), pytest.approx(0.72))
    s = surpluses(full_revelation_segmentation(M1))
    assert s.consumer == 0.0 and s.producer == pytest.approx(M1.total_value)


def test_pareto_mix_examples():
    s0, s1 = surpluses(bbm_segmentation(M1)), surpluses(pareto_mix(M1, 0.0))
    assert (s1.consumer, s1.producer) == (pytest.approx(s0.consumer), pytest.approx(s0.producer))
    assert surpluses(pareto_mix(M1, 1.0)).consumer == 0.0
    half = surpluses(pareto_mix(M1, 0.5))
    assert (half.consumer, half.producer) == (pytest.approx(0.06), pytest.approx(0.78))
    with pytest.raises(MarketError):
        pareto_mix(M1, 1.5)


def test_surplus_triangle_vertices():
    tri = surplus_triangle(M1)
    np.testing.assert_allclose(tri["A"], [0.0, 0.72])
    np.testing.assert_allclose(tri["B"], [0.12, 0.72])
    np.testing.assert_allclose(tri["C"], [0.0, 0.84])


@pytest.mark.parametrize(
    "values, masses",
    [([0.9, 0.6], [0.5, 0.5]), ([0.6, 0.9], [0.5, 0.6]), ([0.6], [0.5, 0.5]), ([0.0, 0.5], [0.5, 0.5])],
)
def test_invalid_markets_raise(values, masses):
    with pytest.raises(MarketError):
        Market(values, masses)


@given(markets())
def test_bbm_pins_producer_surplus_and_is_efficient(market):
    seg = bbm_segmentation(market)
    s = surpluses(seg)
    assert abs(s.producer - revenue(market, optimal_uniform_price(market))) <= 1e-9
    assert abs(s.total - market.total_value) <= 1e-9
    assert is_price_optimal(seg)
    assert seg.m <= market.n
    np.testing.assert_allclose(seg.aggregate(), market.masses, atol=1e-9)


@given(markets(), st.data())
def test_extremal_market_makes_every_support_price_optimal(market, data):
    support = sorted(data.draw(st.sets(st.integers(0, market.n - 1), min_size=1)))
    piece = extremal_market(market.values, support)
    tails = np.cumsum(piece.masses[::-1])[::-1]
    rev = market.values[support] * tails[support]
    np.testing.assert_allclose(rev, rev[0], rtol=1e-12)
    assert set(np.flatnonzero(piece.masses > 0)) == set(support)


@given(markets(), st.floats(0.0, 1.0))
def test_pareto_mix_is_affine_in_lambda(market, lam):
    lo, hi = surpluses(bbm_segmentation(market)), surpluses(full_revelation_segmentation(market))
    mid = surpluses(pareto_mix(market, lam))
    assert mid.consumer == pytest.approx((1 - lam) * lo.consumer + lam * hi.consumer, abs=1e-12)
    assert mid.producer == pytest.approx((1 - lam) * lo.producer + lam * hi.producer, abs=1e-12)


@given(markets(max_n=2))
def test_no_gridded_split_beats_the_segmentation(market):
    best = oracle.grid_segmentation_search(market.values, market.masses, oracle.GridSpec(resolution=20))
    assert best <= surpluses(bbm_segmentation(market)).consumer + 1e-9


def test_three_piece_grid_search_does_not_beat_the_segmentation(rng):
    from helpers import random_market

    for _ in range(3):
        market = random_market(rng, n=3)
        best = oracle.grid_segmentation_search(market.values, market.masses, oracle.GridSpec(resolution=10, max_segments=3))
        assert best <= surpluses(bbm_segmentation(market)).consumer + 1e-9
