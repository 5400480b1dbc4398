"""Synthetic user population and the logistic click model.

Stands in for a live audience: each user carries a latent genre-affinity
vector and an activity probability, and clicks on a recommended item with
probability logistic(bias + w_a * affinity[genre] + w_q * quality).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .config import ClickModelConfig, PopulationsConfig


@dataclass
class UserRecord:
    id: int
    genre_affinity: np.ndarray  # shape (n_genres,)
    activity_prob: float


# The click model parameters are exactly the click_model config block.
ClickModelParams = ClickModelConfig


def logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def click_probability(user: UserRecord, item, params: ClickModelParams) -> float:
    """Click probability for one (user, item) pair; always in (0, 1)."""
    z = (params.bias
         + params.affinity_weight * user.genre_affinity[item.genre]
         + params.quality_weight * item.quality)
    return float(logistic(z))


def click_probabilities(user: UserRecord, genres: np.ndarray, qualities: np.ndarray,
                        params: ClickModelParams) -> np.ndarray:
    """Vectorized `click_probability` over item columns."""
    z = (params.bias
         + params.affinity_weight * user.genre_affinity[genres]
         + params.quality_weight * qualities)
    return logistic(z)


def sample_clicks(user: UserRecord, recommended, params: ClickModelParams, rng) -> list[int]:
    """Independent Bernoulli click per recommended item; returns clicked item ids.

    One uniform draw is consumed per item, in list order.
    """
    clicked = []
    for item in recommended:
        if rng.random() < click_probability(user, item, params):
            clicked.append(item.id)
    return clicked


def _favorite_weights(n_eligible: int, skew: float) -> np.ndarray:
    # skew=0: uniform over eligible genres; skew=1: everyone favors the first.
    w = np.full(n_eligible, (1.0 - skew) / n_eligible)
    w[0] += skew
    return w


def generate_population(config: PopulationsConfig, rng) -> list[UserRecord]:
    """Build the user population from config.

    Reproducible for a fixed generator state; the `skew` knob concentrates
    favorites on the first eligible genre.
    """
    aff = config.user_affinity
    n_users, n_genres = config.users, config.genres
    if aff.kind == "csv":
        return load_population_csv(aff.csv_path, n_genres)

    eligible = np.array(aff.favorite_genres if aff.favorite_genres is not None
                        else range(n_genres), dtype=int)
    weights = _favorite_weights(len(eligible), aff.skew)

    users = []
    activities = config.user_activity.sample(n_users, rng)
    for uid in range(n_users):
        if aff.kind == "one_hot_noise":
            fav = eligible[rng.choice(len(eligible), p=weights)]
            vec = np.zeros(n_genres)
            vec[fav] = 1.0
            if aff.noise_sd > 0:
                vec += rng.normal(0.0, aff.noise_sd, size=n_genres)
        else:  # dirichlet
            alpha = np.full(len(eligible), aff.dirichlet_alpha) * len(eligible) * weights
            vec = np.zeros(n_genres)
            vec[eligible] = rng.dirichlet(alpha)
        users.append(UserRecord(id=uid, genre_affinity=vec, activity_prob=activities[uid]))
    return users


def load_population_csv(path, n_genres: int) -> list[UserRecord]:
    """Load an externally calibrated population.

    Expected columns: user_id, affinity_0 .. affinity_{n_genres-1}, activity_prob.
    """
    users = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        cols = [f"affinity_{g}" for g in range(n_genres)]
        for row in reader:
            missing = [c for c in ["user_id", *cols, "activity_prob"] if c not in row]
            if missing:
                raise ValueError(f"population csv missing column(s): {missing}")
            vec = np.array([float(row[c]) for c in cols])
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"non-finite affinity for user {row['user_id']}")
            p = float(row["activity_prob"])
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"activity_prob out of [0,1] for user {row['user_id']}")
            users.append(UserRecord(id=int(row["user_id"]), genre_affinity=vec, activity_prob=p))
    return users
