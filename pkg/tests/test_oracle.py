import itertools

import numpy as np
import pytest

from supplybandit.oracle import (
    UnitSupplyInstance,
    assignment_optimal_value,
    enumerate_greedy_value,
    enumerate_modified_value,
    enumerate_modified_values,
    enumerate_policy_value,
    greedy_value_closed_form,
    improvement_lower_bound,
    modified_policy_value,
    policy_order_totals,
    shared_preference_order,
)

COUPON_Q = np.array(
    [
        [80.0, 250.0, 200.0],
        [100.0, 280.0, 120.0],
        [60.0, 100.0, 70.0],
    ]
)


def _coupon():
    return UnitSupplyInstance.uniform(COUPON_Q)


def _naive_greedy_pick(q_row, stock):
    # slowest possible: scan a python list
    best, best_v = None, None
    for a, units in enumerate(stock):
        if units > 0 and (best is None or q_row[a] > best_v):
            best, best_v = a, q_row[a]
    return best


def _naive_order_total(q, order, first_override=None):
    stock = [1] * len(q[0])
    total = 0.0
    for slot, j in enumerate(order):
        if all(u == 0 for u in stock):
            break
        if slot == 0 and first_override is not None and j == first_override[0]:
            a = first_override[1]
        else:
            a = _naive_greedy_pick(q[j], stock)
        total += q[j][a]
        stock[a] -= 1
    return total


def _naive_permutation_value(q):
    orders = list(itertools.permutations(range(len(q))))
    return sum(_naive_order_total(q, o) for o in orders) / len(orders)


def _naive_iid_modified_value(q, user, action):
    # every length-J arrival sequence, uniform user draws each slot
    n = len(q)
    total = 0.0
    for seq in itertools.product(range(n), repeat=n):
        total += _naive_order_total(q, seq, first_override=(user, action))
    return total / n**n


def test_coupon_greedy_and_order_totals():
    inst = _coupon()
    totals = policy_order_totals(inst)
    assert [float(v) for v in totals] == [430.0, 420.0, 540.0, 430.0, 400.0, 300.0]
    assert enumerate_greedy_value(inst) == 420.0


def test_coupon_optimum_and_assignment():
    value, assignment = assignment_optimal_value(_coupon())
    assert value == 540.0
    assert list(assignment) == [2, 1, 0]


def test_coupon_gap_scores_reach_optimum_every_order():
    inst = _coupon()
    means = inst.weights @ inst.q
    totals = policy_order_totals(inst, scores=inst.q - means)
    assert [float(v) for v in totals] == [540.0] * 6


def test_shared_order_detection():
    assert list(shared_preference_order(COUPON_Q)) == [1, 2, 0]
    mixed = np.array([[1.0, 2.0], [2.0, 1.0]])
    assert shared_preference_order(mixed) is None


def test_closed_form_equals_weighted_column_sum():
    inst = _coupon()
    assert greedy_value_closed_form(inst) == pytest.approx(sum(COUPON_Q.mean(axis=0)))
    assert greedy_value_closed_form(inst) == pytest.approx(420.0)


def test_enumeration_matches_naive_python_oracle():
    rng = np.random.default_rng(17)
    for _ in range(20):
        k = int(rng.integers(2, 5))
        q = np.sort(rng.random((k, k)), axis=1)[:, ::-1].copy()
        inst = UnitSupplyInstance.uniform(q)
        assert enumerate_greedy_value(inst) == pytest.approx(_naive_permutation_value(q.tolist()), abs=1e-12)


def test_modified_values_match_naive_python_oracle():
    rng = np.random.default_rng(18)
    for _ in range(5):
        q = np.sort(rng.random((3, 3)), axis=1)[:, ::-1].copy()
        inst = UnitSupplyInstance.uniform(q)
        order = inst.preference_order()
        table = enumerate_modified_values(inst)
        for user in range(3):
            for rank in range(3):
                naive = _naive_iid_modified_value(q.tolist(), user, int(order[rank]))
                assert table[user, rank] == pytest.approx(naive, abs=1e-12)
                assert enumerate_modified_value(inst, user, rank) == pytest.approx(naive, abs=1e-12)


def _random_shared_instance(rng, k):
    q = np.sort(rng.random((k, k)), axis=1)[:, ::-1].copy()
    return UnitSupplyInstance.uniform(q)


def test_closed_forms_equal_enumeration_on_random_family():
    rng = np.random.default_rng(19)
    for _ in range(40):
        inst = _random_shared_instance(rng, int(rng.integers(2, 7)))
        assert abs(greedy_value_closed_form(inst) - enumerate_greedy_value(inst)) < 1e-9
        table = enumerate_modified_values(inst)
        for user in range(inst.n_users):
            for rank in range(inst.n_actions):
                assert abs(modified_policy_value(inst, user, rank) - table[user, rank]) < 1e-9


def test_improvement_bound_never_violated():
    rng = np.random.default_rng(20)
    for _ in range(60):
        inst = _random_shared_instance(rng, int(rng.integers(2, 8)))
        gap = assignment_optimal_value(inst)[0] - enumerate_greedy_value(inst)
        for user in range(inst.n_users):
            for rank in range(inst.n_actions):
                bound = improvement_lower_bound(inst, user, rank)
                assert gap >= bound - 1e-12
                if rank == 0:
                    assert bound == 0.0


def test_optimum_dominates_greedy():
    rng = np.random.default_rng(21)
    for _ in range(30):
        inst = _random_shared_instance(rng, int(rng.integers(2, 7)))
        assert assignment_optimal_value(inst)[0] >= enumerate_greedy_value(inst) - 1e-12


def test_assignment_matches_brute_force_small():
    rng = np.random.default_rng(22)
    for _ in range(15):
        k = int(rng.integers(2, 6))
        q = rng.random((k, k))
        inst = UnitSupplyInstance.uniform(q)
        value, assignment = assignment_optimal_value(inst)
        brute = max(
            sum(q[j, perm[j]] for j in range(k)) for perm in itertools.permutations(range(k))
        )
        assert value == pytest.approx(brute, abs=1e-12)
        assert sum(q[j, assignment[j]] for j in range(k)) == pytest.approx(brute, abs=1e-12)


def test_instance_validation():
    with pytest.raises(ValueError):
        UnitSupplyInstance.uniform(np.array([[1.0, 2.0]]))  # not square
    crossed = UnitSupplyInstance(q=np.array([[1.0, 2.0], [2.0, 1.0]]), weights=np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        crossed.preference_order()  # no shared order


def test_enumeration_guards_size():
    q = np.tile(np.arange(9.0, 0.0, -1.0), (9, 1))
    inst = UnitSupplyInstance.uniform(q)
    with pytest.raises(ValueError):
        policy_order_totals(inst)
