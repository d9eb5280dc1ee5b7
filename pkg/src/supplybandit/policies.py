"""Decision rules over an estimated value table.

All policies select among the actions with remaining stock. The greedy rule
takes the user's highest estimate; the relative-gap rule subtracts the
population mean per action first, steering scarce stock toward the users who
value it most relative to everyone else; the mixed-supply rule applies the
gap score only to actions forecast to sell out; the softmax rule is the
stochastic logging policy used to generate datasets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from supplybandit.core import InventoryState, available_actions

__all__ = [
    "population_means",
    "GreedyPolicy",
    "RelativeGapPolicy",
    "MixedSupplyPolicy",
    "SoftmaxPolicy",
    "partition_by_depletion",
]


def population_means(q_hat: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Arrival-weighted mean estimate per action, the gap-score reference point."""
    q_hat = np.asarray(q_hat, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (q_hat.shape[0],):
        raise ValueError("weights must have one entry per user")
    return weights @ q_hat


def _masked_argmax(scores: np.ndarray, candidates: np.ndarray) -> int:
    # Ties resolve to the lowest action index: argmax returns the first hit
    # and candidates are ascending.
    return int(candidates[np.argmax(scores[candidates])])


@dataclass(frozen=True)
class GreedyPolicy:
    """Pick the available action with the highest estimated value."""

    q_hat: np.ndarray
    kind = "greedy"

    def __post_init__(self):
        object.__setattr__(self, "q_hat", np.asarray(self.q_hat, dtype=float))

    def select(self, user: int, state: InventoryState, rng: np.random.Generator | None = None) -> int:
        avail = available_actions(state)
        if avail.size == 0:
            raise ValueError("no available actions")
        return _masked_argmax(self.q_hat[user], avail)


@dataclass(frozen=True)
class RelativeGapPolicy:
    """Pick the available action maximizing q_hat minus beta times its population mean.

    beta = 1 is the base rule; beta = 0 recovers the greedy rule; values in
    between trade individual optimality against population-level reallocation.
    """

    q_hat: np.ndarray
    means: np.ndarray
    beta: float = 1.0
    kind = "relative_gap"

    def __post_init__(self):
        q_hat = np.asarray(self.q_hat, dtype=float)
        means = np.asarray(self.means, dtype=float)
        if means.shape != (q_hat.shape[1],):
            raise ValueError("means must have one entry per action")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        object.__setattr__(self, "q_hat", q_hat)
        object.__setattr__(self, "means", means)

    @classmethod
    def build(cls, q_hat: np.ndarray, weights: np.ndarray, beta: float = 1.0) -> "RelativeGapPolicy":
        return cls(q_hat=q_hat, means=population_means(q_hat, weights), beta=beta)

    def select(self, user: int, state: InventoryState, rng: np.random.Generator | None = None) -> int:
        avail = available_actions(state)
        if avail.size == 0:
            raise ValueError("no available actions")
        return _masked_argmax(self.q_hat[user] - self.beta * self.means, avail)


def partition_by_depletion(
    initial_stock: np.ndarray | InventoryState,
    horizon: int,
    q_c: np.ndarray,
    weights: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Split actions into forecast-sold-out and forecast-in-stock sets.

    The forecast assumes each round spreads one uniform pick over all K
    actions: projected stock is the initial stock minus horizon times the
    arrival-weighted mean consumption probability divided by K. Actions whose
    projection reaches zero land in the sold set.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    stock = initial_stock.stock if isinstance(initial_stock, InventoryState) else np.asarray(initial_stock)
    q_c = np.asarray(q_c, dtype=float)
    mean_consumption = np.asarray(weights, dtype=float) @ q_c
    forecast = stock - horizon * mean_consumption / q_c.shape[1]
    sold = np.flatnonzero(forecast <= 0)
    unsold = np.flatnonzero(forecast > 0)
    return sold, unsold


@dataclass(frozen=True)
class MixedSupplyPolicy:
    """Gap rule on forecast-sold-out actions, greedy rule on the rest.

    Each call produces one candidate from each group (restricted to remaining
    stock) and keeps the one with the higher raw estimate; an exact tie keeps
    the in-stock candidate, conserving scarce stock at no cost. With an empty
    sold set this is decision-identical to the greedy rule.
    """

    q_hat: np.ndarray
    means: np.ndarray
    sold: np.ndarray
    unsold: np.ndarray
    kind = "mixed"

    def __post_init__(self):
        q_hat = np.asarray(self.q_hat, dtype=float)
        means = np.asarray(self.means, dtype=float)
        sold = np.asarray(self.sold, dtype=np.intp)
        unsold = np.asarray(self.unsold, dtype=np.intp)
        n_actions = q_hat.shape[1]
        merged = np.sort(np.concatenate([sold, unsold]))
        if not np.array_equal(merged, np.arange(n_actions)):
            raise ValueError("sold/unsold must partition the action set")
        sold_mask = np.zeros(n_actions, dtype=bool)
        sold_mask[sold] = True
        object.__setattr__(self, "q_hat", q_hat)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sold", sold)
        object.__setattr__(self, "unsold", unsold)
        object.__setattr__(self, "_sold_mask", sold_mask)

    @classmethod
    def build(
        cls,
        q_hat: np.ndarray,
        weights: np.ndarray,
        initial_stock: np.ndarray | InventoryState,
        horizon: int,
        q_c: np.ndarray,
    ) -> "MixedSupplyPolicy":
        sold, unsold = partition_by_depletion(initial_stock, horizon, q_c, weights)
        return cls(q_hat=q_hat, means=population_means(q_hat, weights), sold=sold, unsold=unsold)

    def select(self, user: int, state: InventoryState, rng: np.random.Generator | None = None) -> int:
        avail = available_actions(state)
        if avail.size == 0:
            raise ValueError("no available actions")
        mask = getattr(self, "_sold_mask")
        sold_avail = avail[mask[avail]]
        unsold_avail = avail[~mask[avail]]
        row = self.q_hat[user]
        if sold_avail.size == 0:
            return _masked_argmax(row, unsold_avail)
        if unsold_avail.size == 0:
            return _masked_argmax(row - self.means, sold_avail)
        cand_sold = _masked_argmax(row - self.means, sold_avail)
        cand_unsold = _masked_argmax(row, unsold_avail)
        if row[cand_sold] > row[cand_unsold]:
            return cand_sold
        return cand_unsold


@dataclass(frozen=True)
class SoftmaxPolicy:
    """Stochastic rule sampling available actions proportional to exp(beta * q_hat)."""

    q_hat: np.ndarray
    beta: float
    kind = "softmax"

    def __post_init__(self):
        object.__setattr__(self, "q_hat", np.asarray(self.q_hat, dtype=float))

    def probabilities(self, user: int, state: InventoryState) -> np.ndarray:
        """Selection probabilities over all K actions (zero where out of stock)."""
        avail = available_actions(state)
        if avail.size == 0:
            raise ValueError("no available actions")
        logits = self.beta * self.q_hat[user, avail]
        logits -= logits.max()
        weights = np.exp(logits)
        probs = np.zeros(self.q_hat.shape[1])
        probs[avail] = weights / weights.sum()
        return probs

    def select(self, user: int, state: InventoryState, rng: np.random.Generator | None = None) -> int:
        if rng is None:
            raise ValueError("softmax selection needs an rng")
        probs = self.probabilities(user, state)
        return int(rng.choice(probs.shape[0], p=probs))
