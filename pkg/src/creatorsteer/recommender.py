"""Platform recommendation policies.

Every policy scores the whole corpus for one user and returns the top-k
item ids, with ties broken deterministically by lowest item id. A small
matrix-factorization learner and a greedy minimum-exposure re-ranker are
included as optional plug-ins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, MfConfig, RecommenderConfig


def top_k_ids(scores: np.ndarray, k: int) -> list[int]:
    """Ids of the k highest scores; exact ties resolve to the lowest id."""
    n = len(scores)
    if n == 0 or k <= 0:
        return []
    k = min(k, n)
    if k == n:
        cand = np.arange(n)
    else:
        kth = np.partition(scores, n - k)[n - k]
        cand = np.flatnonzero(scores >= kth)
    order = np.lexsort((cand, -scores[cand]))
    return [int(i) for i in cand[order[:k]]]


class Recommender:
    """Base policy: subclasses implement `scores` over the full corpus."""

    tag = "base"

    def scores(self, user, corpus) -> np.ndarray:
        raise NotImplementedError

    def recommend(self, user, corpus, k: int) -> list[int]:
        if corpus.n_items == 0:
            return []
        return top_k_ids(self.scores(user, corpus), k)

    def on_round_end(self, corpus, click_log, round_index: int) -> None:
        """Hook for policies that retrain on interaction data."""


class OracleAffinity(Recommender):
    """Scores by the user's true genre affinity plus item quality."""

    tag = "oracle_affinity"

    def scores(self, user, corpus) -> np.ndarray:
        return user.genre_affinity[corpus.genres[:corpus.n_items]] + corpus.qualities[:corpus.n_items]


class EmpiricalCtr(Recommender):
    """Scores by per-item smoothed CTR: (clicks + 1) / (impressions + 2)."""

    tag = "empirical_ctr"

    def scores(self, user, corpus) -> np.ndarray:
        n = corpus.n_items
        return (corpus.clicks[:n] + 1.0) / (corpus.impressions[:n] + 2.0)


class Popularity(Recommender):
    """Scores by total clicks."""

    tag = "popularity"

    def scores(self, user, corpus) -> np.ndarray:
        return corpus.clicks[:corpus.n_items].astype(float)


def train_mf(click_log, n_users: int, n_items: int, dims: int, epochs: int,
             lr: float, reg: float, rng, negatives: int = 1):
    """Squared-loss matrix factorization on observed clicks.

    Each click record is a positive (label 1); `negatives` uniformly sampled
    items per positive act as implicit negatives (label 0). Plain SGD,
    reproducible for a fixed generator.

    Returns (user_factors, item_factors, per_epoch_loss).
    """
    if dims < 1:
        raise ConfigError("mf dims must be >= 1")
    pairs = [(u, i) for u, i in zip(click_log.users, click_log.items)]
    if not pairs:
        return np.zeros((n_users, dims)), np.zeros((n_items, dims)), []

    P = rng.normal(0.0, 0.1, size=(n_users, dims))
    Q = rng.normal(0.0, 0.1, size=(n_items, dims))
    losses = []
    for _ in range(epochs):
        order = rng.permutation(len(pairs))
        sq_err = 0.0
        count = 0
        for idx in order:
            u, i = pairs[idx]
            samples = [(i, 1.0)] + [(int(rng.integers(n_items)), 0.0) for _ in range(negatives)]
            for j, label in samples:
                err = label - P[u] @ Q[j]
                pu = P[u].copy()
                P[u] += lr * (err * Q[j] - reg * P[u])
                Q[j] += lr * (err * pu - reg * Q[j])
                sq_err += err * err
                count += 1
        losses.append(sq_err / count)
    return P, Q, losses


class MfLite(Recommender):
    """Recommends by learned user/item factor dot products.

    Retrains from scratch every `retrain_every` rounds; items created after
    the last retrain score 0 until the next one.
    """

    tag = "mf_lite"

    def __init__(self, cfg: MfConfig, n_users: int, rng):
        self.cfg = cfg
        self.n_users = n_users
        self.rng = rng
        self.user_factors = np.zeros((n_users, cfg.dims))
        self.item_factors = np.zeros((0, cfg.dims))

    def scores(self, user, corpus) -> np.ndarray:
        n = corpus.n_items
        out = np.zeros(n)
        m = min(n, len(self.item_factors))
        if m and user.id < self.n_users:
            out[:m] = self.item_factors[:m] @ self.user_factors[user.id]
        return out

    def on_round_end(self, corpus, click_log, round_index: int) -> None:
        if round_index % self.cfg.retrain_every == 0:
            self.user_factors, self.item_factors, _ = train_mf(
                click_log, self.n_users, corpus.n_items, self.cfg.dims,
                self.cfg.epochs, self.cfg.lr, self.cfg.reg, self.rng,
                negatives=self.cfg.negatives)


def make_recommender(config: RecommenderConfig, n_users: int, rng) -> Recommender:
    if config.kind == "oracle_affinity":
        return OracleAffinity()
    if config.kind == "empirical_ctr":
        return EmpiricalCtr()
    if config.kind == "popularity":
        return Popularity()
    if config.kind == "mf_lite":
        return MfLite(config.mf, n_users, rng)
    raise ConfigError(f"unknown recommender kind {config.kind!r}")


def recommend(user, corpus, click_log, k: int, kind) -> list[int]:
    """Top-k item ids for one user under the given policy.

    `kind` may be a Recommender instance or one of the stateless tags
    ("oracle_affinity" | "empirical_ctr" | "popularity").
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    if isinstance(kind, str):
        kind = make_recommender(RecommenderConfig.from_dict({"kind": kind}), 0, None)
    return kind.recommend(user, corpus, k)


@dataclass
class RerankResult:
    lists: list[list[int]]
    satisfied: bool
    message: str = ""


def min_exposure_rerank(base_lists: list[list[int]], scores: list[np.ndarray],
                        item_creator: np.ndarray, alive: np.ndarray,
                        guarantee: int) -> RerankResult:
    """Greedy exposure floor: every alive creator with corpus items gets at
    least `guarantee` impressions, by swapping the lowest-scored slots.

    `scores[u]` holds user u's full-corpus scores (used both to pick victim
    slots and replacement items). An infeasible guarantee leaves the lists
    unchanged and reports failure instead of raising.
    """
    lists = [list(lst) for lst in base_lists]
    if guarantee <= 0:
        return RerankResult(lists, True)

    n_creators = len(alive)
    creator_items: list[list[int]] = [[] for _ in range(n_creators)]
    for item_id, c in enumerate(item_creator):
        creator_items[c].append(item_id)
    eligible = [c for c in range(n_creators) if alive[c] and creator_items[c]]

    total_slots = sum(len(lst) for lst in lists)
    if guarantee * len(eligible) > total_slots:
        return RerankResult(lists, False,
                            f"infeasible: need {guarantee * len(eligible)} slots, have {total_slots}")

    counts = np.zeros(n_creators, dtype=int)
    for lst in lists:
        for item_id in lst:
            counts[item_creator[item_id]] += 1

    def protected(c: int) -> bool:
        return c in eligible_set and counts[c] <= guarantee

    eligible_set = set(eligible)
    for c in eligible:
        while counts[c] < guarantee:
            # lowest-scored swappable slot whose removal breaks no guarantee
            best = None  # (slot_score, u, pos)
            for u, lst in enumerate(lists):
                in_list = set(lst)
                if not any(j not in in_list for j in creator_items[c]):
                    continue
                for pos, item_id in enumerate(lst):
                    victim = item_creator[item_id]
                    if victim == c or protected(victim):
                        continue
                    s = float(scores[u][item_id])
                    if best is None or s < best[0]:
                        best = (s, u, pos)
            if best is None:
                return RerankResult(lists, False,
                                    f"stuck: creator {c} cannot reach guarantee {guarantee}")
            _, u, pos = best
            in_list = set(lists[u])
            candidates = [j for j in creator_items[c] if j not in in_list]
            repl = max(candidates, key=lambda j: (scores[u][j], -j))
            counts[item_creator[lists[u][pos]]] -= 1
            lists[u][pos] = repl
            counts[c] += 1
    return RerankResult(lists, True)
