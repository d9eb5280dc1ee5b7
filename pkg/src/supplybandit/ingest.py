"""Loading dense interaction data as a reward model.

Reads a fully observed user-item score matrix plus per-user features from
CSV, optionally subsamples both axes, and converts scores into a reward
model with certain consumption (every shown item counts as consumed, only
the score magnitude varies).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from supplybandit.reward import RewardModel

__all__ = [
    "InteractionDataset",
    "load_interactions",
    "save_interactions",
    "subsample",
    "to_reward_model",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InteractionDataset:
    """Dense user-item score matrix with aligned user features."""

    ratings: np.ndarray
    features: np.ndarray
    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]

    def __post_init__(self):
        ratings = np.asarray(self.ratings, dtype=float)
        features = np.asarray(self.features, dtype=float)
        if ratings.shape != (len(self.user_ids), len(self.item_ids)):
            raise ValueError("ratings shape must match the id vectors")
        if features.shape[0] != len(self.user_ids):
            raise ValueError("features must have one row per user")
        if not np.all(np.isfinite(ratings)):
            raise ValueError("ratings must be finite")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "ratings", ratings)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "user_ids", tuple(self.user_ids))
        object.__setattr__(self, "item_ids", tuple(self.item_ids))

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, header required") from None
        return header, [row for row in reader if row]


def load_interactions(path_ratings, path_features) -> InteractionDataset:
    """Assemble the dense matrix from two CSV files.

    The ratings file needs columns user_id,item_id,score with exactly one row
    per (user, item) pair; the features file needs user_id followed by the
    feature columns, one row per user. Users and items are ordered by sorted
    id. Missing pairs, duplicate pairs, and users present in only one file
    are errors.
    """
    header, rows = _read_rows(path_ratings)
    if header[:3] != ["user_id", "item_id", "score"]:
        raise ValueError(f"{path_ratings}: expected header user_id,item_id,score")
    scores: dict[tuple[str, str], float] = {}
    for row in rows:
        if len(row) != 3:
            raise ValueError(f"{path_ratings}: malformed row {row!r}")
        user, item, raw = row
        if (user, item) in scores:
            raise ValueError(f"duplicate interaction for ({user}, {item})")
        try:
            scores[(user, item)] = float(raw)
        except ValueError:
            raise ValueError(f"non-numeric score {raw!r} for ({user}, {item})") from None

    f_header, f_rows = _read_rows(path_features)
    if not f_header or f_header[0] != "user_id":
        raise ValueError(f"{path_features}: expected header user_id,f1,...")
    feature_map: dict[str, list[float]] = {}
    for row in f_rows:
        if len(row) != len(f_header):
            raise ValueError(f"{path_features}: malformed row {row!r}")
        if row[0] in feature_map:
            raise ValueError(f"duplicate feature row for user {row[0]}")
        feature_map[row[0]] = [float(v) for v in row[1:]]

    rating_users = {user for user, _ in scores}
    if rating_users != set(feature_map):
        orphans = rating_users.symmetric_difference(feature_map)
        raise ValueError(f"user ids differ between files: {sorted(orphans)}")

    user_ids = sorted(feature_map)
    item_ids = sorted({item for _, item in scores})
    ratings = np.empty((len(user_ids), len(item_ids)))
    for i, user in enumerate(user_ids):
        for j, item in enumerate(item_ids):
            try:
                ratings[i, j] = scores[(user, item)]
            except KeyError:
                raise ValueError(f"missing interaction for ({user}, {item})") from None
    expected = len(user_ids) * len(item_ids)
    if len(scores) != expected:
        raise ValueError(f"{len(scores)} interactions for a {len(user_ids)}x{len(item_ids)} grid")
    features = np.array([feature_map[user] for user in user_ids])
    return InteractionDataset(ratings=ratings, features=features, user_ids=user_ids, item_ids=item_ids)


def save_interactions(ds: InteractionDataset, path_ratings, path_features) -> None:
    """Write the dataset back in the load_interactions file format."""
    with open(path_ratings, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "item_id", "score"])
        for i, user in enumerate(ds.user_ids):
            for j, item in enumerate(ds.item_ids):
                writer.writerow([user, item, repr(float(ds.ratings[i, j]))])
    with open(path_features, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id"] + [f"f{k + 1}" for k in range(ds.features.shape[1])])
        for i, user in enumerate(ds.user_ids):
            writer.writerow([user] + [repr(float(v)) for v in ds.features[i]])


def subsample(ds: InteractionDataset, n_users: int, n_items: int, rng: np.random.Generator) -> InteractionDataset:
    """Uniform without-replacement sample of users and items."""
    if n_users > ds.n_users or n_items > ds.n_items:
        raise ValueError("subsample larger than the dataset")
    user_idx = rng.choice(ds.n_users, size=n_users, replace=False)
    item_idx = rng.choice(ds.n_items, size=n_items, replace=False)
    return InteractionDataset(
        ratings=ds.ratings[np.ix_(user_idx, item_idx)],
        features=ds.features[user_idx],
        user_ids=tuple(ds.user_ids[i] for i in user_idx),
        item_ids=tuple(ds.item_ids[j] for j in item_idx),
    )


def to_reward_model(ds: InteractionDataset) -> RewardModel:
    """Scores become reward magnitudes with consumption certain.

    Negative scores are handled by shifting the whole matrix up by the
    minimum, preserving order while meeting the nonnegative-reward contract;
    the shift is logged when it happens.
    """
    q_r = ds.ratings
    low = q_r.min() if q_r.size else 0.0
    if low < 0:
        log.info("shifting ratings up by %s to make rewards nonnegative", -low)
        q_r = q_r - low
    return RewardModel.from_value_matrix(q_r)
