"""Episode simulation and Monte Carlo value estimation.

One episode: users arrive for T rounds (independent draws or shuffled
passes over the pool), the policy picks an in-stock action, a Bernoulli
draw decides consumption, a noisy reward is realized, and stock is updated.
Paired policy comparisons share the arrival and outcome randomness so the
policies differ only through their decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from supplybandit.core import (
    ActionSet,
    InventoryState,
    LoggedTuple,
    Trajectory,
    UserPopulation,
)
from supplybandit.reward import RewardModel

__all__ = [
    "EnvironmentSpec",
    "ValueEstimate",
    "EpisodeResult",
    "initial_supply",
    "draw_arrivals",
    "run_episode",
    "run_episode_streams",
    "draw_outcomes",
    "estimate_policy_value",
    "relative_policy_value",
]

_SUPPLY_SCHEMES = ("proportional", "inverse_proportional", "random")
_NOISE_KINDS = ("normal", "truncated_normal")
_ARRIVAL_MODES = ("iid", "permutation")


@dataclass(frozen=True)
class EnvironmentSpec:
    """Everything one episode needs: population, model, stock, horizon, noise."""

    population: UserPopulation
    actions: ActionSet
    model: RewardModel
    horizon: int
    initial_supply: InventoryState
    reward_noise_sigma: float = 0.0
    reward_noise_kind: str = "normal"
    arrival_mode: str = "iid"

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.model.n_users != self.population.n_users:
            raise ValueError("model rows must match the population")
        if self.model.n_actions != self.actions.count:
            raise ValueError("model columns must match the action set")
        if self.initial_supply.n_actions != self.actions.count:
            raise ValueError("initial supply length must match the action set")
        if self.reward_noise_sigma < 0:
            raise ValueError("reward noise sigma must be nonnegative")
        if self.reward_noise_kind not in _NOISE_KINDS:
            raise ValueError(f"unknown reward noise kind {self.reward_noise_kind!r}")
        if self.arrival_mode not in _ARRIVAL_MODES:
            raise ValueError(f"unknown arrival mode {self.arrival_mode!r}")


@dataclass(frozen=True)
class ValueEstimate:
    """Monte Carlo estimate of a policy's expected episode value."""

    mean: float
    std_error: float
    n_sims: int
    per_timestep_cumulative: np.ndarray


@dataclass
class EpisodeResult:
    """Outcome of one simulated episode."""

    value: float
    per_step: np.ndarray
    actions: np.ndarray
    consumed_counts: np.ndarray
    steps: int
    trajectory: Trajectory | None = None
    checkpoint_counts: dict[int, np.ndarray] = field(default_factory=dict)


def initial_supply(
    scheme: str,
    s_max: int,
    model: RewardModel,
    population: UserPopulation,
    rng: np.random.Generator,
) -> InventoryState:
    """Starting stock per action under one of the three allocation schemes.

    proportional scales stock with each action's mean value (the most wanted
    action gets exactly s_max); inverse_proportional gives high-value actions
    the least stock (s_max times the minimum mean value over the square root
    of each action's mean value, kept verbatim from the protocol this
    reproduces); random draws uniform integers in [1, s_max]. Formula results
    are rounded to nearest and floored at one unit.
    """
    if s_max < 1:
        raise ValueError("s_max must be at least 1")
    if scheme not in _SUPPLY_SCHEMES:
        raise ValueError(f"unknown supply scheme {scheme!r}")
    n_actions = model.n_actions
    if scheme == "random":
        stock = rng.integers(1, s_max + 1, size=n_actions)
        return InventoryState(stock=stock.astype(np.int64))
    demand = population.weights @ model.q
    if scheme == "proportional":
        top = demand.max()
        if top <= 0:
            raise ValueError("proportional supply needs a positive mean value")
        raw = s_max * demand / top
    else:
        if np.any(demand <= 0):
            raise ValueError("inverse_proportional supply needs positive mean values")
        raw = s_max * demand.min() / np.sqrt(demand)
    stock = np.maximum(np.rint(raw).astype(np.int64), 1)
    return InventoryState(stock=stock)


def draw_arrivals(env: EnvironmentSpec, rng: np.random.Generator) -> np.ndarray:
    """Arrival sequence for one episode, length T.

    iid mode draws each round's user from the arrival weights; permutation
    mode concatenates fresh uniform shuffles of the whole pool, so every user
    appears exactly once per pass.
    """
    n_users = env.population.n_users
    horizon = env.horizon
    if env.arrival_mode == "iid":
        return rng.choice(n_users, size=horizon, p=env.population.weights)
    passes = math.ceil(horizon / n_users)
    seq = np.concatenate([rng.permutation(n_users) for _ in range(passes)])
    return seq[:horizon]


def draw_outcomes(env: EnvironmentSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Pre-draw the action-independent outcome randomness for T rounds.

    Returns (consumption uniforms, reward noise). The reward noise is a
    standard normal for the normal kind and a uniform for the truncated kind,
    mapped through the appropriate inverse CDF at realization time; sharing
    these arrays across policies is what makes paired comparisons tight.
    """
    consume_u = rng.random(env.horizon)
    if env.reward_noise_kind == "normal":
        noise = rng.standard_normal(env.horizon)
    else:
        noise = rng.random(env.horizon)
    return consume_u, noise


def _truncated_normal(mean: float, sigma: float, u: float) -> float:
    # Inverse CDF of a normal truncated below at zero, fed a shared uniform.
    alpha = ndtr(-mean / sigma)
    return mean + sigma * float(ndtri(alpha + u * (1.0 - alpha)))


def run_episode_streams(
    env: EnvironmentSpec,
    policy,
    arrivals: np.ndarray,
    consume_u: np.ndarray,
    noise: np.ndarray,
    policy_rng: np.random.Generator | None,
    record: bool = False,
    checkpoints: tuple[int, ...] = (),
) -> EpisodeResult:
    """Run one episode on pre-drawn randomness.

    Stops early once every action is out of stock. ``checkpoints`` snapshots
    the user-by-action consumption counts after the named rounds (a snapshot
    at the stopping round covers any later checkpoint too).
    """
    q_c, q_r = env.model.q_c, env.model.q_r
    sigma, kind = env.reward_noise_sigma, env.reward_noise_kind
    stock = env.initial_supply.stock.copy()
    n_users, n_actions = env.model.n_users, env.model.n_actions
    per_step = np.zeros(env.horizon)
    actions_taken = np.full(env.horizon, -1, dtype=np.int64)
    counts = np.zeros((n_users, n_actions), dtype=np.int64)
    tuples: list[LoggedTuple] = []
    pending = sorted(set(checkpoints))
    snapshots: dict[int, np.ndarray] = {}
    value = 0.0
    steps = 0

    live = _LiveState(stock)
    for t in range(env.horizon):
        if not stock.any():
            break
        user = int(arrivals[t])
        state = InventoryState(stock=stock.copy()) if record else live
        action = int(policy.select(user, state, policy_rng))
        consumed = 1 if consume_u[t] < q_c[user, action] else 0
        if sigma == 0.0:
            reward = float(q_r[user, action])
        elif kind == "normal":
            reward = float(q_r[user, action] + sigma * noise[t])
        else:
            reward = _truncated_normal(float(q_r[user, action]), sigma, float(noise[t]))
        if consumed:
            stock[action] -= 1
            counts[user, action] += 1
            contribution = consumed * reward
            value += contribution
            per_step[t] = contribution
        actions_taken[t] = action
        steps = t + 1
        if record:
            tuples.append(
                LoggedTuple(t=t, user=user, action=action, consumed=consumed, reward=reward, stock_before=state)
            )
        while pending and steps >= pending[0]:
            snapshots[pending.pop(0)] = counts.copy()

    for checkpoint in pending:
        snapshots[checkpoint] = counts.copy()
    trajectory = Trajectory(tuples=tuples) if record else None
    return EpisodeResult(
        value=value,
        per_step=per_step,
        actions=actions_taken[:steps],
        consumed_counts=counts,
        steps=steps,
        trajectory=trajectory,
        checkpoint_counts=snapshots,
    )


class _LiveState:
    """Zero-copy stand-in for InventoryState on the unrecorded hot path."""

    __slots__ = ("stock",)

    def __init__(self, stock: np.ndarray):
        self.stock = stock

    @property
    def n_actions(self) -> int:
        return self.stock.shape[0]


def run_episode(env: EnvironmentSpec, policy, rng: np.random.Generator) -> Trajectory:
    """Simulate one fully recorded episode with self-contained randomness."""
    if not env.initial_supply.stock.any():
        raise ValueError("no available actions at the first round")
    arrival_rng, outcome_rng, policy_rng = rng.spawn(3)
    arrivals = draw_arrivals(env, arrival_rng)
    consume_u, noise = draw_outcomes(env, outcome_rng)
    result = run_episode_streams(env, policy, arrivals, consume_u, noise, policy_rng, record=True)
    return result.trajectory


def _episode_generators(seed: int, n_sims: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n_sims)


def estimate_policy_value(env: EnvironmentSpec, policy, n_sims: int, seed: int) -> ValueEstimate:
    """Mean episode value over n_sims independent seeded episodes.

    Episode i gets seeds derived from (seed, i), so the estimate is
    reproducible and independent of execution order.
    """
    if n_sims < 1:
        raise ValueError("n_sims must be at least 1")
    values = np.empty(n_sims)
    cumulative = np.zeros(env.horizon)
    for i, episode_seq in enumerate(_episode_generators(seed, n_sims)):
        arrival_seq, outcome_seq, policy_seq = episode_seq.spawn(3)
        arrivals = draw_arrivals(env, np.random.Generator(np.random.PCG64(arrival_seq)))
        consume_u, noise = draw_outcomes(env, np.random.Generator(np.random.PCG64(outcome_seq)))
        policy_rng = np.random.Generator(np.random.PCG64(policy_seq))
        result = run_episode_streams(env, policy, arrivals, consume_u, noise, policy_rng)
        values[i] = result.value
        cumulative += np.cumsum(result.per_step)
    mean = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(n_sims)) if n_sims > 1 else 0.0
    return ValueEstimate(
        mean=mean,
        std_error=std_error,
        n_sims=n_sims,
        per_timestep_cumulative=cumulative / n_sims,
    )


def relative_policy_value(env: EnvironmentSpec, policy_a, policy_b, n_sims: int, seed: int) -> float:
    """Ratio of mean values of two policies under common random numbers.

    Every episode index feeds both policies the same arrival sequence,
    consumption uniforms, and reward noise; both policy rngs are seeded
    identically, so running a policy against itself returns exactly 1.0.
    """
    if n_sims < 1:
        raise ValueError("n_sims must be at least 1")
    total_a = 0.0
    total_b = 0.0
    for episode_seq in _episode_generators(seed, n_sims):
        arrival_seq, outcome_seq, policy_seq = episode_seq.spawn(3)
        arrivals = draw_arrivals(env, np.random.Generator(np.random.PCG64(arrival_seq)))
        consume_u, noise = draw_outcomes(env, np.random.Generator(np.random.PCG64(outcome_seq)))
        rng_a = np.random.Generator(np.random.PCG64(policy_seq))
        rng_b = np.random.Generator(np.random.PCG64(policy_seq))
        total_a += run_episode_streams(env, policy_a, arrivals, consume_u, noise, rng_a).value
        total_b += run_episode_streams(env, policy_b, arrivals, consume_u, noise, rng_b).value
    if total_b <= 0:
        raise ValueError("reference policy value must be positive")
    return total_a / total_b
