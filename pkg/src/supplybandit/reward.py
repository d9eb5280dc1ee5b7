"""Reward-model construction and estimation.

Builds the tabular consumption/reward model over a finite user population:
feature-driven components, a population-shared descending baseline, their
convex mixture, and two estimators of the expected-value table (additive
Gaussian noise, per-action ridge regression).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from supplybandit.core import LoggedDataset, UserPopulation

__all__ = [
    "RewardModel",
    "RewardEstimate",
    "Environment",
    "QualityModel",
    "mix_components",
    "sorted_baseline_g",
    "synth_feature_reward",
    "synthesize_model",
    "noisy_estimate",
    "ridge_fit",
]


@dataclass(frozen=True)
class RewardModel:
    """Tabular model: consumption probability, reward magnitude, and value.

    ``q_c[j, a]`` is the probability user j consumes action a when shown it,
    ``q_r[j, a]`` the expected reward magnitude, and ``q = q_c * q_r`` the
    expected per-round value.
    """

    q_c: np.ndarray
    q_r: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        q_c = np.asarray(self.q_c, dtype=float)
        q_r = np.asarray(self.q_r, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if q_c.ndim != 2 or q_c.shape != q_r.shape or q.shape != q_c.shape:
            raise ValueError("q_c, q_r, q must share one J x K shape")
        if np.any(q_c < 0) or np.any(q_c > 1):
            raise ValueError("q_c entries must lie in [0, 1]")
        if not np.all(np.isfinite(q_r)) or np.any(q_r < 0):
            raise ValueError("q_r entries must be finite and nonnegative")
        if np.max(np.abs(q - q_c * q_r)) > 1e-12:
            raise ValueError("q must equal q_c * q_r within 1e-12")
        object.__setattr__(self, "q_c", q_c)
        object.__setattr__(self, "q_r", q_r)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_components(cls, q_c: np.ndarray, q_r: np.ndarray) -> "RewardModel":
        q_c = np.asarray(q_c, dtype=float)
        q_r = np.asarray(q_r, dtype=float)
        return cls(q_c=q_c, q_r=q_r, q=q_c * q_r)

    @classmethod
    def from_value_matrix(cls, q: np.ndarray) -> "RewardModel":
        """Model with certain consumption: q_c is all ones and q_r = q."""
        q = np.asarray(q, dtype=float)
        return cls(q_c=np.ones_like(q), q_r=q, q=q.copy())

    @property
    def n_users(self) -> int:
        return self.q.shape[0]

    @property
    def n_actions(self) -> int:
        return self.q.shape[1]


@dataclass(frozen=True)
class RewardEstimate:
    """An estimate q_hat of the value table, tagged with how it was made."""

    q_hat: np.ndarray
    provenance: str
    sigma: float | None = None

    _PROVENANCES = ("exact", "noise", "ridge")

    def __post_init__(self):
        q_hat = np.asarray(self.q_hat, dtype=float)
        if q_hat.ndim != 2:
            raise ValueError("q_hat must be a J x K matrix")
        if not np.all(np.isfinite(q_hat)):
            raise ValueError("q_hat entries must be finite")
        if self.provenance not in self._PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "q_hat", q_hat)


def mix_components(f: np.ndarray, g: np.ndarray, lam: float) -> np.ndarray:
    """Convex mixture lam*f + (1-lam)*g, elementwise."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {g.shape}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("mixing weight must lie in [0, 1]")
    return lam * f + (1.0 - lam) * g


def sorted_baseline_g(rng: np.random.Generator, shape: tuple[int, int], max_f: float) -> np.ndarray:
    """Population-shared baseline: uniform draws on [0, max_f], rows sorted descending.

    Every row is non-increasing, so at the pure-baseline end of the mixture all
    users rank actions identically. max_f = 0 degenerates to the zero matrix.
    """
    if max_f < 0:
        raise ValueError("max_f must be nonnegative")
    raw = rng.uniform(0.0, max_f, size=shape) if max_f > 0 else np.zeros(shape)
    return -np.sort(-raw, axis=1)


def synth_feature_reward(
    features: np.ndarray, n_actions: int, rng: np.random.Generator, kind: str
) -> np.ndarray:
    """Context-driven component: per-action affine score of the features.

    kind "logistic" squashes the score through a sigmoid (entries in (0,1));
    kind "linear" shifts the score by its minimum (entries >= 0). Coefficients
    are standard-normal draws from rng, so the output is deterministic given
    (features, rng state).
    """
    features = np.asarray(features, dtype=float)
    if not np.all(np.isfinite(features)):
        raise ValueError("features must be finite")
    coef = rng.standard_normal((features.shape[1], n_actions))
    intercept = rng.standard_normal(n_actions)
    score = features @ coef + intercept
    if kind == "logistic":
        return 1.0 / (1.0 + np.exp(-score))
    if kind == "linear":
        return score - score.min()
    raise ValueError(f"unknown kind {kind!r}")


def synthesize_model(
    features: np.ndarray, n_actions: int, lam: float, rng: np.random.Generator
) -> RewardModel:
    """Full synthetic model: mixture of feature-driven and shared-baseline parts.

    Draw order is fixed (consumption coefficients, reward coefficients,
    consumption baseline, reward baseline) so a seeded rng reproduces the
    model exactly. The mixed consumption matrix is clamped to [0, 1]; the
    logistic component is already a probability, the clamp guards the
    baseline edge cases.
    """
    f_c = synth_feature_reward(features, n_actions, rng, "logistic")
    f_r = synth_feature_reward(features, n_actions, rng, "linear")
    g_c = sorted_baseline_g(rng, f_c.shape, float(f_c.max()))
    g_r = sorted_baseline_g(rng, f_r.shape, float(f_r.max()))
    q_c = np.clip(mix_components(f_c, g_c, lam), 0.0, 1.0)
    q_r = mix_components(f_r, g_r, lam)
    return RewardModel.from_components(q_c, q_r)


def noisy_estimate(model: RewardModel, sigma: float, rng: np.random.Generator) -> RewardEstimate:
    """q_hat = q + iid Gaussian noise; sigma = 0 returns q bit-exactly."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return RewardEstimate(q_hat=model.q.copy(), provenance="exact", sigma=0.0)
    q_hat = model.q + rng.normal(0.0, sigma, size=model.q.shape)
    return RewardEstimate(q_hat=q_hat, provenance="noise", sigma=float(sigma))


def ridge_fit(
    dataset: LoggedDataset,
    population: UserPopulation,
    n_actions: int,
    penalty: float,
    target: str = "product_cr",
) -> RewardEstimate:
    """Per-action ridge regression of the chosen target on context features.

    target "product_cr" regresses consumed*reward over every logged round
    (estimates the value table); "reward_r" regresses the reward magnitude
    over consumed rounds only. The intercept is left unpenalized, so a huge
    penalty degenerates to per-action mean fits. Actions with no usable
    observations fall back to the global mean of the observed targets.
    """
    if penalty <= 0:
        raise ValueError("penalty must be positive")
    users, actions, consumed, rewards = dataset.arrays()
    if users.size == 0:
        raise ValueError("dataset is empty")
    if target == "product_cr":
        y = consumed * rewards
    elif target == "reward_r":
        keep = consumed == 1
        users, actions, y = users[keep], actions[keep], rewards[keep]
        if users.size == 0:
            raise ValueError("no consumed rounds to fit reward_r on")
    else:
        raise ValueError(f"unknown target {target!r}")

    feats = population.features
    n_users, dim = feats.shape
    design = np.column_stack([feats, np.ones(n_users)])
    # Penalize slopes only; index dim is the intercept.
    damp = penalty * np.diag(np.r_[np.ones(dim), 0.0])
    global_mean = float(y.mean())

    q_hat = np.full((n_users, n_actions), global_mean)
    for a in range(n_actions):
        rows = actions == a
        if not np.any(rows):
            continue
        x_a = design[users[rows]]
        y_a = y[rows]
        coef = np.linalg.solve(x_a.T @ x_a + damp, x_a.T @ y_a)
        q_hat[:, a] = design @ coef
    return RewardEstimate(q_hat=q_hat, provenance="ridge")
