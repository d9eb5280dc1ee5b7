"""Shared domain types and the inventory transition dynamics.

A finite user population arrives over a horizon of discrete rounds. Each
round, a policy picks an action with remaining stock; a binary consumption
signal decides whether one unit of that action's inventory is used up.
Everything downstream (policies, simulation, exact oracles) is built on the
types in this module.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "UserPopulation",
    "ActionSet",
    "InventoryState",
    "LoggedTuple",
    "Trajectory",
    "LoggedDataset",
    "available_actions",
    "update_inventory",
]


@dataclass(frozen=True)
class UserPopulation:
    """Finite pool of users with context features and an arrival distribution.

    ``features`` has one row per user; ``weights`` is the probability of each
    user arriving in a given round (uniform by default).
    """

    features: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 2 or features.shape[0] < 1:
            raise ValueError("features must be a J x d matrix with J >= 1")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (features.shape[0],):
            raise ValueError("weights must have one entry per user")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1 within 1e-9")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, features: np.ndarray) -> "UserPopulation":
        features = np.asarray(features, dtype=float)
        n = features.shape[0]
        return cls(features=features, weights=np.full(n, 1.0 / n))

    @property
    def n_users(self) -> int:
        return self.features.shape[0]

    @property
    def context_dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ActionSet:
    """The finite set of recommendable actions, with optional display names."""

    count: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("action set must contain at least one action")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != self.count:
                raise ValueError("labels must match the action count")
            object.__setattr__(self, "labels", labels)

    def label(self, action: int) -> str:
        if self.labels is not None:
            return self.labels[action]
        return str(action)


@dataclass(frozen=True)
class InventoryState:
    """Per-action remaining stock, as nonnegative integer counts."""

    stock: np.ndarray

    def __post_init__(self):
        stock = np.asarray(self.stock)
        if stock.ndim != 1:
            raise ValueError("stock must be a vector")
        if not np.issubdtype(stock.dtype, np.integer):
            as_int = np.asarray(stock, dtype=np.int64)
            if not np.array_equal(as_int, stock):
                raise ValueError("stock must contain integers")
            stock = as_int
        else:
            stock = stock.astype(np.int64)
        if np.any(stock < 0):
            raise ValueError("stock entries must be nonnegative")
        object.__setattr__(self, "stock", stock)

    @classmethod
    def of(cls, values: Sequence[int]) -> "InventoryState":
        return cls(stock=np.asarray(values, dtype=np.int64))

    @property
    def n_actions(self) -> int:
        return self.stock.shape[0]

    @property
    def total(self) -> int:
        return int(self.stock.sum())

    def is_empty(self) -> bool:
        return bool(np.all(self.stock == 0))


def available_actions(state: InventoryState) -> np.ndarray:
    """Indices of actions with positive stock, in ascending order.

    An empty result is legal and means every action has been depleted.
    """
    return np.flatnonzero(state.stock > 0)


def update_inventory(state: InventoryState, action: int, consumed: int) -> InventoryState:
    """Apply one round's consumption signal to the inventory.

    Consumption removes exactly one unit of ``action``; a non-consumed round
    leaves the state untouched. Selecting an out-of-stock action is a policy
    contract violation and is rejected.
    """
    if consumed not in (0, 1):
        raise ValueError("consumed must be 0 or 1")
    if not 0 <= action < state.n_actions:
        raise IndexError(f"action {action} out of range")
    if state.stock[action] <= 0:
        raise ValueError(f"action {action} has no remaining stock")
    if consumed == 0:
        return state
    stock = state.stock.copy()
    stock[action] -= 1
    return InventoryState(stock=stock)


@dataclass(frozen=True)
class LoggedTuple:
    """One logged round: who arrived, what was shown, what happened.

    ``stock_before`` is the inventory snapshot at decision time.
    """

    t: int
    user: int
    action: int
    consumed: int
    reward: float
    stock_before: InventoryState

    def __post_init__(self):
        if self.consumed not in (0, 1):
            raise ValueError("consumed must be 0 or 1")
        if self.stock_before.stock[self.action] <= 0:
            raise ValueError("logged action had no stock at decision time")


@dataclass
class Trajectory:
    """Ordered rounds of one episode under a single policy."""

    tuples: list[LoggedTuple] = field(default_factory=list)

    def __post_init__(self):
        times = [tup.t for tup in self.tuples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("time indices must be strictly increasing")

    @property
    def realized_value(self) -> float:
        return float(sum(tup.consumed * tup.reward for tup in self.tuples))

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[LoggedTuple]:
        return iter(self.tuples)

    def to_csv(self, path) -> None:
        """Write rounds as CSV: t,user,action,consumed,reward,stock_json."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "user", "action", "consumed", "reward", "stock_json"])
            for tup in self.tuples:
                writer.writerow(
                    [
                        tup.t,
                        tup.user,
                        tup.action,
                        tup.consumed,
                        repr(tup.reward),
                        json.dumps([int(v) for v in tup.stock_before.stock]),
                    ]
                )


@dataclass
class LoggedDataset:
    """Collection of trajectories gathered under one logging policy."""

    episodes: list[Trajectory] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.episodes)

    @property
    def n_tuples(self) -> int:
        return sum(len(ep) for ep in self.episodes)

    def all_tuples(self) -> Iterator[LoggedTuple]:
        for episode in self.episodes:
            yield from episode

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flatten to (users, actions, consumed, rewards) arrays."""
        users, actions, consumed, rewards = [], [], [], []
        for tup in self.all_tuples():
            users.append(tup.user)
            actions.append(tup.action)
            consumed.append(tup.consumed)
            rewards.append(tup.reward)
        return (
            np.asarray(users, dtype=np.int64),
            np.asarray(actions, dtype=np.int64),
            np.asarray(consumed, dtype=np.int64),
            np.asarray(rewards, dtype=float),
        )
