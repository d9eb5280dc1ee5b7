"""Exact computations for small unit-supply instances.

Covers the regime where every action has exactly one unit of stock, every
shown action is consumed, and the user pool is small enough to enumerate:
averaging deterministic policies over arrival orders, the order-independent
assignment optimum, closed-form values under a shared preference order, and
the guaranteed-improvement lower bound they imply.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "UnitSupplyInstance",
    "shared_preference_order",
    "enumerate_greedy_value",
    "enumerate_policy_value",
    "policy_order_totals",
    "assignment_optimal_value",
    "greedy_value_closed_form",
    "modified_policy_value",
    "enumerate_modified_values",
    "enumerate_modified_value",
    "improvement_lower_bound",
]

_MAX_ENUM_USERS = 8
_MAX_SEQUENCES = 2_000_000


def shared_preference_order(q: np.ndarray) -> np.ndarray | None:
    """Column order ranking actions best-to-worst for every user at once.

    Returns the order as an index array (position r holds the column of rank
    r), or None when users disagree. Equal adjacent values are accepted.
    """
    q = np.asarray(q, dtype=float)
    order = np.argsort(-q[0], kind="stable")
    ranked = q[:, order]
    if np.all(ranked[:, :-1] >= ranked[:, 1:] - 1e-15):
        return order
    return None


@dataclass(frozen=True)
class UnitSupplyInstance:
    """A value matrix plus arrival weights, with one unit of stock per action."""

    q: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] < 1:
            raise ValueError("q must be a square value matrix")
        if q.shape[0] != q.shape[1]:
            raise ValueError("unit-supply analysis needs one user per action")
        if not np.all(np.isfinite(q)):
            raise ValueError("q entries must be finite")
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (q.shape[0],):
            raise ValueError("weights must have one entry per user")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be a probability vector")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, q: np.ndarray) -> "UnitSupplyInstance":
        q = np.asarray(q, dtype=float)
        n = q.shape[0]
        return cls(q=q, weights=np.full(n, 1.0 / n))

    @property
    def n_users(self) -> int:
        return self.q.shape[0]

    @property
    def n_actions(self) -> int:
        return self.q.shape[1]

    @property
    def is_uniform(self) -> bool:
        return bool(np.allclose(self.weights, 1.0 / self.n_users, atol=1e-12))

    def preference_order(self) -> np.ndarray:
        order = shared_preference_order(self.q)
        if order is None:
            raise ValueError("instance rows do not share one preference order")
        return order


def _check_enumerable(inst: UnitSupplyInstance) -> None:
    if inst.n_users != inst.n_actions:
        raise ValueError("order enumeration requires one user per action")
    if inst.n_users > _MAX_ENUM_USERS:
        raise ValueError(f"enumeration limited to {_MAX_ENUM_USERS} users")
    if not inst.is_uniform:
        raise ValueError("order enumeration requires uniform arrival weights")


def policy_order_totals(inst: UnitSupplyInstance, scores: np.ndarray | None = None) -> np.ndarray:
    """Realized totals of a static argmax policy, one per arrival order.

    Each of the J users arrives exactly once; orders are the J! permutations
    in lexicographic sequence. The policy picks the available action with the
    highest score for the arriving user (scores default to the value matrix
    itself, i.e. the greedy rule); ties go to the lowest action index. Every
    pick is consumed, so each order ends with all stock gone.
    """
    _check_enumerable(inst)
    scores = inst.q if scores is None else np.asarray(scores, dtype=float)
    if scores.shape != inst.q.shape:
        raise ValueError("scores must match the value matrix shape")
    n = inst.n_users
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    open_slots = np.ones((perms.shape[0], n), dtype=bool)
    totals = np.zeros(perms.shape[0])
    rows = np.arange(perms.shape[0])
    for t in range(n):
        users = perms[:, t]
        masked = np.where(open_slots, scores[users], -np.inf)
        picks = np.argmax(masked, axis=1)
        totals += inst.q[users, picks]
        open_slots[rows, picks] = False
    return totals


def enumerate_policy_value(inst: UnitSupplyInstance, scores: np.ndarray | None = None) -> float:
    """Average of policy_order_totals over all arrival orders."""
    return float(policy_order_totals(inst, scores).mean())


def enumerate_greedy_value(inst: UnitSupplyInstance) -> float:
    """Exact order-averaged value of the greedy rule (argmax of q itself)."""
    return enumerate_policy_value(inst, None)


def assignment_optimal_value(inst: UnitSupplyInstance) -> tuple[float, np.ndarray]:
    """Order-independent optimum: the maximum-weight user-action assignment.

    Returns the best total and one maximizing assignment as an array mapping
    user index to action index.
    """
    if inst.n_users != inst.n_actions:
        raise ValueError("assignment optimum requires one user per action")
    rows, cols = linear_sum_assignment(inst.q, maximize=True)
    assignment = np.empty(inst.n_users, dtype=np.intp)
    assignment[rows] = cols
    return float(inst.q[rows, cols].sum()), assignment


def greedy_value_closed_form(inst: UnitSupplyInstance) -> float:
    """Greedy value under a shared preference order: sum of weighted column means.

    With unit stock and certain consumption, every action is handed out
    exactly once, and each slot's arrival is distributed as the population,
    so the expected total collapses to the sum over actions of the
    arrival-weighted mean value.
    """
    inst.preference_order()
    return float((inst.weights @ inst.q).sum())


def modified_policy_value(inst: UnitSupplyInstance, user: int, rank: int) -> float:
    """Closed-form value of the first-round deviation policy.

    The policy hands the rank-th best action (rank 0 = most preferred) to
    ``user`` if that user arrives first, and plays greedily otherwise and
    thereafter. Exact under independent arrivals drawn from the weights at
    each slot; equals the greedy value plus the weighted gap difference.
    """
    order = inst.preference_order()
    if not 0 <= user < inst.n_users:
        raise IndexError("user out of range")
    if not 0 <= rank < inst.n_actions:
        raise IndexError("rank out of range")
    col_means = inst.weights @ inst.q
    top, target = order[0], order[rank]
    gap_target = inst.q[user, target] - col_means[target]
    gap_top = inst.q[user, top] - col_means[top]
    return float(inst.weights[user] * (gap_target - gap_top) + greedy_value_closed_form(inst))


def improvement_lower_bound(inst: UnitSupplyInstance, user: int, rank: int) -> float:
    """Guaranteed optimal-minus-greedy improvement from one (user, rank) pair.

    Equals modified_policy_value minus the greedy closed form; rank 0 gives
    exactly zero. Maximizing it over pairs motivates scoring actions by their
    value relative to the population mean.
    """
    order = inst.preference_order()
    if not 0 <= user < inst.n_users:
        raise IndexError("user out of range")
    if not 0 <= rank < inst.n_actions:
        raise IndexError("rank out of range")
    col_means = inst.weights @ inst.q
    top, target = order[0], order[rank]
    gap_target = inst.q[user, target] - col_means[target]
    gap_top = inst.q[user, top] - col_means[top]
    return float(inst.weights[user] * (gap_target - gap_top))


def _greedy_continuations(inst: UnitSupplyInstance) -> np.ndarray:
    """Expected greedy continuation value after one action is consumed first.

    Entry b is the mean total collected over slots 2..K when action b was
    consumed at slot 1, enumerated over every length-(K-1) arrival sequence
    drawn independently from the weights. Pure simulation: masked argmax per
    slot, no closed-form shortcuts.
    """
    n_users, n_actions = inst.n_users, inst.n_actions
    steps = n_actions - 1
    n_seq = n_users**steps
    if n_seq * max(steps, 1) > _MAX_SEQUENCES:
        raise ValueError("sequence enumeration budget exceeded")
    if steps == 0:
        return np.zeros(n_actions)
    grids = np.meshgrid(*([np.arange(n_users)] * steps), indexing="ij")
    seqs = np.stack([g.ravel() for g in grids], axis=1)
    seq_weights = inst.weights[seqs].prod(axis=1)
    out = np.zeros(n_actions)
    rows = np.arange(n_seq)
    for first in range(n_actions):
        open_slots = np.ones((n_seq, n_actions), dtype=bool)
        open_slots[:, first] = False
        totals = np.zeros(n_seq)
        for t in range(steps):
            users = seqs[:, t]
            masked = np.where(open_slots, inst.q[users], -np.inf)
            picks = np.argmax(masked, axis=1)
            totals += inst.q[users, picks]
            open_slots[rows, picks] = False
        out[first] = float(seq_weights @ totals)
    return out


def enumerate_modified_values(inst: UnitSupplyInstance) -> np.ndarray:
    """Enumerated value of every first-round deviation, as a user x rank matrix.

    Arrivals are independent draws from the weights, one per slot, K slots in
    total. The first slot plays the deviation when the deviation's user shows
    up and the greedy pick otherwise; later slots are always greedy. The
    K continuation values are enumerated once and reused, splitting on the
    first slot by independence of the remaining draws.
    """
    order = inst.preference_order()
    if inst.n_users != inst.n_actions:
        raise ValueError("sequence enumeration requires one user per action")
    cont = _greedy_continuations(inst)
    greedy_first = np.argmax(inst.q, axis=1)
    greedy_term = inst.q[np.arange(inst.n_users), greedy_first] + cont[greedy_first]
    base = float(inst.weights @ greedy_term)
    out = np.empty((inst.n_users, inst.n_actions))
    for user in range(inst.n_users):
        for rank in range(inst.n_actions):
            target = order[rank]
            deviated = inst.q[user, target] + cont[target]
            out[user, rank] = base + inst.weights[user] * (deviated - greedy_term[user])
    return out


def enumerate_modified_value(inst: UnitSupplyInstance, user: int, rank: int) -> float:
    """Single entry of enumerate_modified_values."""
    if not 0 <= user < inst.n_users:
        raise IndexError("user out of range")
    if not 0 <= rank < inst.n_actions:
        raise IndexError("rank out of range")
    return float(enumerate_modified_values(inst)[user, rank])
