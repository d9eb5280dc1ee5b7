import numpy as np
import pytest

from supplybandit import (
    GreedyPolicy,
    InventoryState,
    MixedSupplyPolicy,
    RelativeGapPolicy,
    SoftmaxPolicy,
    available_actions,
    update_inventory,
)
from supplybandit.policies import partition_by_depletion, population_means


def _uniform_weights(n):
    return np.full(n, 1.0 / n)


def test_population_means_are_arrival_weighted():
    q = np.array([[1.0, 0.0], [3.0, 10.0]])
    w = np.array([0.75, 0.25])
    assert np.allclose(population_means(q, w), [1.5, 2.5])


def test_greedy_picks_best_available():
    q = np.array([[1.0, 5.0, 3.0]])
    pol = GreedyPolicy(q_hat=q)
    assert pol.select(0, InventoryState.of([1, 1, 1])) == 1
    assert pol.select(0, InventoryState.of([1, 0, 1])) == 2
    assert pol.select(0, InventoryState.of([1, 0, 0])) == 0


def test_greedy_breaks_ties_low_index():
    q = np.array([[2.0, 2.0, 2.0]])
    assert GreedyPolicy(q_hat=q).select(0, InventoryState.of([0, 3, 3])) == 1


def test_relative_gap_beta_zero_is_greedy():
    rng = np.random.default_rng(0)
    q = rng.random((6, 5))
    w = _uniform_weights(6)
    gap = RelativeGapPolicy.build(q, w, beta=0.0)
    greedy = GreedyPolicy(q_hat=q)
    for _ in range(50):
        stock = InventoryState.of(rng.integers(0, 3, size=5) + (rng.random(5) < 0.5))
        if stock.is_empty():
            continue
        user = int(rng.integers(6))
        assert gap.select(user, stock) == greedy.select(user, stock)


def test_relative_gap_subtracts_population_mean():
    # One action is great on average but no better than the rest for this
    # user; scoring by gap should avoid it.
    q = np.array([[5.0, 4.9], [5.0, 0.1]])
    w = _uniform_weights(2)
    pol = RelativeGapPolicy.build(q, w, beta=1.0)
    # means = (5.0, 2.5); gaps for user 0: (0.0, 2.4) -> action 1
    assert pol.select(0, InventoryState.of([1, 1])) == 1
    assert GreedyPolicy(q_hat=q).select(0, InventoryState.of([1, 1])) == 0


def test_relative_gap_rejects_bad_beta():
    q = np.zeros((2, 2))
    with pytest.raises(ValueError):
        RelativeGapPolicy.build(q, _uniform_weights(2), beta=1.5)


def test_gap_shift_invariance_at_full_beta():
    # Adding a per-action constant shifts scores and means equally, so the
    # gap ranking cannot move. Greedy has no such protection.
    rng = np.random.default_rng(1)
    q = rng.random((5, 4))
    w = _uniform_weights(5)
    delta = np.array([10.0, 0.0, -3.0, 2.0])
    base = RelativeGapPolicy.build(q, w, beta=1.0)
    shifted = RelativeGapPolicy.build(q + delta, w, beta=1.0)
    for user in range(5):
        for _ in range(20):
            stock = InventoryState.of(rng.integers(0, 2, size=4) + 1)
            assert base.select(user, stock) == shifted.select(user, stock)
    g_base = GreedyPolicy(q_hat=q)
    g_shift = GreedyPolicy(q_hat=q + delta)
    full = InventoryState.of([1, 1, 1, 1])
    moved = [g_base.select(u, full) != g_shift.select(u, full) for u in range(5)]
    assert any(moved)


def test_partition_forecast_example():
    # stock (1, 100), horizon 10, two actions with mean consumption 1:
    # each action expects 10 * 1 / 2 = 5 sales, so only the 1-unit action
    # forecasts a sellout.
    sold, unsold = partition_by_depletion(
        np.array([1, 100]), 10, np.ones((3, 2)), _uniform_weights(3)
    )
    assert list(sold) == [0]
    assert list(unsold) == [1]


def test_partition_boundary_counts_as_sold():
    sold, unsold = partition_by_depletion(
        np.array([5, 6]), 10, np.ones((2, 2)), _uniform_weights(2)
    )
    assert list(sold) == [0]
    assert list(unsold) == [1]


def test_mixed_empty_sold_matches_greedy_decisions():
    rng = np.random.default_rng(2)
    q = rng.random((6, 5))
    w = _uniform_weights(6)
    stock0 = np.full(5, 1000)
    mixed = MixedSupplyPolicy.build(q, w, InventoryState.of(stock0), 50, np.ones((6, 5)))
    assert mixed.sold.size == 0
    greedy = GreedyPolicy(q_hat=q)
    stock = InventoryState.of(stock0)
    for t in range(50):
        user = int(rng.integers(6))
        a = mixed.select(user, stock)
        b = greedy.select(user, stock)
        assert a == b
        stock = update_inventory(stock, b, 1)


def test_mixed_prefers_higher_raw_value_candidate():
    q = np.array([[4.0, 1.0, 3.0]])
    w = np.array([1.0])
    # force sold = {0}, unsold = {1, 2}
    mixed = MixedSupplyPolicy(
        q_hat=q,
        means=population_means(q, w),
        sold=np.array([0]),
        unsold=np.array([1, 2]),
    )
    # sold candidate: action 0 (gap 0 after mean subtraction of itself);
    # unsold candidate: action 2 with q=3 < 4 -> sold candidate wins on raw q
    assert mixed.select(0, InventoryState.of([1, 1, 1])) == 0
    # deplete action 0: only unsold candidates remain
    assert mixed.select(0, InventoryState.of([0, 1, 1])) == 2


def test_mixed_tie_goes_to_unsold():
    q = np.array([[2.0, 2.0]])
    mixed = MixedSupplyPolicy(
        q_hat=q,
        means=np.array([0.0, 0.0]),
        sold=np.array([0]),
        unsold=np.array([1]),
    )
    assert mixed.select(0, InventoryState.of([1, 1])) == 1


def test_policies_always_feasible():
    rng = np.random.default_rng(3)
    q = rng.random((4, 6))
    w = _uniform_weights(4)
    policies = [
        GreedyPolicy(q_hat=q),
        RelativeGapPolicy.build(q, w, beta=1.0),
        MixedSupplyPolicy.build(q, w, InventoryState.of(np.full(6, 2)), 40, np.ones((4, 6))),
        SoftmaxPolicy(q_hat=q, beta=-1.0),
    ]
    for _ in range(200):
        stock_vec = rng.integers(0, 3, size=6)
        if stock_vec.sum() == 0:
            stock_vec[rng.integers(6)] = 1
        stock = InventoryState.of(stock_vec)
        user = int(rng.integers(4))
        for pol in policies:
            action = pol.select(user, stock, rng)
            assert action in available_actions(stock)


def test_deterministic_policies_ignore_rng():
    q = np.array([[1.0, 2.0]])
    stock = InventoryState.of([1, 1])
    pol = GreedyPolicy(q_hat=q)
    assert pol.select(0, stock) == pol.select(0, stock, np.random.default_rng(0))


def test_softmax_probabilities_normalize_and_mask():
    q = np.array([[1.0, 2.0, 3.0]])
    pol = SoftmaxPolicy(q_hat=q, beta=-1.0)
    probs = pol.probabilities(0, InventoryState.of([1, 0, 1]))
    assert probs[1] == 0.0
    assert probs.sum() == pytest.approx(1.0)
    assert probs[0] > probs[2]  # negative beta favors low q


def test_softmax_extreme_scores_stay_finite():
    q = np.array([[1e4, -1e4, 0.0]])
    pol = SoftmaxPolicy(q_hat=q, beta=1.0)
    probs = pol.probabilities(0, InventoryState.of([1, 1, 1]))
    assert np.all(np.isfinite(probs))
    assert probs.sum() == pytest.approx(1.0)
    assert probs[0] == pytest.approx(1.0)


def test_softmax_requires_rng():
    pol = SoftmaxPolicy(q_hat=np.array([[1.0, 2.0]]), beta=1.0)
    with pytest.raises(ValueError):
        pol.select(0, InventoryState.of([1, 1]), None)


def test_softmax_sampling_tracks_probabilities():
    q = np.array([[0.0, 2.0]])
    pol = SoftmaxPolicy(q_hat=q, beta=1.0)
    rng = np.random.default_rng(8)
    stock = InventoryState.of([10, 10])
    picks = np.array([pol.select(0, stock, rng) for _ in range(4000)])
    want = pol.probabilities(0, stock)[1]
    assert abs(picks.mean() - want) < 0.03
