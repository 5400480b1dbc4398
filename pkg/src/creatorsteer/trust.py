"""Per-creator trust estimation from follow/ignore observations.

One free logit per creator, squashed through a logistic head, fitted by
gradient descent on binary cross-entropy. With independent parameters the
minimizer is exactly the per-creator empirical follow rate, so the
estimator converges to the Bernoulli MLE while keeping the
"tiny network over creator ids" shape.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class FollowDataset:
    """Observed (creator, followed) outcomes for delivered suggestions."""

    records: list[tuple[int, int, int]] = field(default_factory=list)  # (creator, y, round)

    def add(self, creator_id: int, followed: bool, round_index: int = 0) -> None:
        self.records.append((creator_id, int(followed), round_index))

    def __len__(self) -> int:
        return len(self.records)

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["creator_id", "round", "followed"])
            for creator_id, y, round_index in self.records:
                writer.writerow([creator_id, round_index, y])


@dataclass
class TrustParams:
    """Free logits; predict() maps them through a logistic, so estimates stay
    strictly inside (0,1) and zero init gives the 0.5 prior."""

    logits: np.ndarray

    @classmethod
    def zeros(cls, n_creators: int) -> "TrustParams":
        return cls(logits=np.zeros(n_creators))


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def aggregate_counts(dataset: FollowDataset, n_creators: int,
                     decay_half_life: float | None = None,
                     current_round: int = 0):
    """Weighted (observations, follows) per creator.

    With a half-life, each record is weighted 0.5^(age / half_life); the
    BCE over the dataset depends on the records only through these sums.
    """
    n = np.zeros(n_creators)
    k = np.zeros(n_creators)
    for creator_id, y, round_index in dataset.records:
        w = 1.0
        if decay_half_life is not None:
            w = 0.5 ** (max(current_round - round_index, 0) / decay_half_life)
        n[creator_id] += w
        k[creator_id] += w * y
    return n, k


def bce_loss_and_grad(logits: np.ndarray, n: np.ndarray, k: np.ndarray):
    """Binary cross-entropy over aggregated counts and its gradient.

    loss = -sum_i [k_i log p_i + (n_i - k_i) log (1 - p_i)], p = sigmoid(z)
    dloss/dz_i = n_i p_i - k_i
    """
    p = _sigmoid(logits)
    loss = -np.sum(k * np.log(p) + (n - k) * np.log1p(-p))
    grad = n * p - k
    return float(loss), grad


def fit(dataset: FollowDataset, params: TrustParams, epochs: int, lr: float,
        decay_half_life: float | None = None, current_round: int = 0) -> TrustParams:
    """Gradient descent on the BCE; converges to each creator's (weighted)
    empirical follow rate. Steps are normalized per creator's observation
    mass so the learning rate is scale-free."""
    n, k = aggregate_counts(dataset, len(params.logits), decay_half_life, current_round)
    scale = np.maximum(n, 1.0)
    for _ in range(epochs):
        _, grad = bce_loss_and_grad(params.logits, n, k)
        params.logits -= lr * grad / scale
    return params


def predict(params: TrustParams, creator_id: int) -> float:
    """Estimated trust in (0,1); unknown creators get the 0.5 prior."""
    if not 0 <= creator_id < len(params.logits):
        return 0.5
    return float(_sigmoid(params.logits[creator_id]))


def predict_all(params: TrustParams) -> np.ndarray:
    return _sigmoid(params.logits)


class TrustEstimator:
    """Incremental wrapper used inside the simulation loop.

    Keeps decayed sufficient statistics so the per-round refit is O(creators)
    regardless of how much follow data has accumulated. Decay is enabled only
    for dynamic-trust runs.
    """

    def __init__(self, n_creators: int, lr: float = 0.5, epochs_per_round: int = 50,
                 decay_half_life: float | None = None):
        self.params = TrustParams.zeros(n_creators)
        self.lr = lr
        self.epochs_per_round = epochs_per_round
        self.decay_factor = (0.5 ** (1.0 / decay_half_life)) if decay_half_life else 1.0
        self.n = np.zeros(n_creators)
        self.k = np.zeros(n_creators)

    def observe_round(self, observations: list[tuple[int, bool]]) -> None:
        """Fold in one round of follow outcomes and take refit steps."""
        self.n *= self.decay_factor
        self.k *= self.decay_factor
        for creator_id, followed in observations:
            self.n[creator_id] += 1.0
            self.k[creator_id] += float(followed)
        scale = np.maximum(self.n, 1.0)
        for _ in range(self.epochs_per_round):
            _, grad = bce_loss_and_grad(self.params.logits, self.n, self.k)
            self.params.logits -= self.lr * grad / scale

    def predict_all(self) -> np.ndarray:
        return predict_all(self.params)

    def predict(self, creator_id: int) -> float:
        return predict(self.params, creator_id)
