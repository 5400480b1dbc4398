"""Bounded-rational creator decision-making.

A creator that receives a suggestion follows it with probability equal to
its trust degree; otherwise (and whenever there is no suggestion) a
pluggable fallback policy picks the genre. Trust can optionally evolve
with the creator's round-over-round click delta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError

NO_SUGGESTION = 0


@dataclass
class HistoryEntry:
    item_id: int
    genre: int
    clicks: int = 0


@dataclass
class CreatorDecision:
    genre: int
    followed: bool


@dataclass
class CfdState:
    """Creator-feature-dynamics fallback: click feedback nudges genre logits."""

    genre_logits: np.ndarray
    learning_rate: float = 0.1


@dataclass
class SimuLineState:
    """Sampling proportional to smoothed recent per-genre click counts."""

    recent_clicks: np.ndarray
    alpha: float = 1.0


@dataclass
class CreatorRecord:
    id: int
    trust_true: float
    activity_prob: float
    fallback_model: str = "random_history"
    fallback_state: CfdState | SimuLineState | None = None
    history: list[HistoryEntry] = field(default_factory=list)
    zero_click_streak: int = 0
    alive: bool = True


def fallback_random_history(creator: CreatorRecord, rng, n_genres: int) -> int:
    """Uniform over the distinct genres the creator has produced before.

    Empty history falls back to uniform over all genres. Consumes exactly
    one integer draw.
    """
    genres = sorted({e.genre for e in creator.history})
    if not genres:
        return int(rng.integers(n_genres))
    return genres[rng.integers(len(genres))]


def fallback_most_history_click(creator: CreatorRecord) -> int:
    """Genre with the highest click total over the creator's own items.

    Candidates are the genres actually present in the history; ties resolve
    to the lowest genre index, and an empty history resolves to genre 0.
    """
    if not creator.history:
        return 0
    sums: dict[int, int] = {}
    for e in creator.history:
        sums[e.genre] = sums.get(e.genre, 0) + e.clicks
    best = max(sums.items(), key=lambda kv: (kv[1], -kv[0]))
    return best[0]


def fallback_cfd(state: CfdState, last_round_feedback: np.ndarray, rng) -> int:
    """Logit ascent on last round's per-genre click feedback, then softmax sample."""
    state.genre_logits = state.genre_logits + state.learning_rate * last_round_feedback
    z = state.genre_logits - np.max(state.genre_logits)
    p = np.exp(z)
    p /= p.sum()
    return _sample_categorical(p, rng)


def fallback_simuline(state: SimuLineState, rng) -> int:
    """Sample genre g with probability (clicks_g + alpha) / sum(clicks + alpha)."""
    weights = state.recent_clicks + state.alpha
    total = weights.sum()
    if total <= 0:
        p = np.full(len(weights), 1.0 / len(weights))
    else:
        p = weights / total
    return _sample_categorical(p, rng)


def _sample_categorical(p: np.ndarray, rng) -> int:
    # One uniform draw; side="right" so zero-probability entries are never hit.
    u = rng.random()
    return int(np.searchsorted(np.cumsum(p), u, side="right").clip(0, len(p) - 1))


def decide(creator: CreatorRecord, suggestion: int, rng,
           n_genres: int, last_round_feedback: np.ndarray | None = None) -> CreatorDecision:
    """One creation decision for an active, alive creator.

    With a non-null suggestion the creator follows it with probability
    `trust_true` (one uniform draw); otherwise the fallback model picks the
    genre. `followed` is true only for an accepted non-null suggestion.
    """
    if suggestion != NO_SUGGESTION:
        if rng.random() < creator.trust_true:
            return CreatorDecision(genre=suggestion - 1, followed=True)

    model = creator.fallback_model
    if model == "random_history":
        genre = fallback_random_history(creator, rng, n_genres)
    elif model == "most_history_click":
        genre = fallback_most_history_click(creator)
    elif model == "cfd":
        fb = last_round_feedback if last_round_feedback is not None else np.zeros(n_genres)
        genre = fallback_cfd(creator.fallback_state, fb, rng)
    elif model == "simuline":
        genre = fallback_simuline(creator.fallback_state, rng)
    else:
        raise ConfigError(f"unknown creator fallback model {model!r}")
    return CreatorDecision(genre=genre, followed=False)


def update_trust(creator: CreatorRecord, followed_this_round: bool,
                 r_prev: int, r_curr: int) -> float:
    """Click-delta trust update, clamped to [0,1].

    Applied only when the creator followed a suggestion this round and had a
    nonzero click count last round (the relative delta is undefined at
    r_prev = 0, in which case trust is left unchanged).
    """
    if followed_this_round and r_prev > 0:
        delta = (r_curr - r_prev) / r_prev
        creator.trust_true = float(np.clip(creator.trust_true + delta, 0.0, 1.0))
    return creator.trust_true


def update_trust_unfollow_decay(creator: CreatorRecord, followed_this_round: bool,
                                suggested: bool, r_prev: int, r_curr: int,
                                penalty: float) -> float:
    """Alternative reading: ignoring a delivered suggestion erodes trust.

    Follow rounds use the same click-delta rule; a delivered-but-ignored
    suggestion costs a flat `penalty`.
    """
    if followed_this_round:
        return update_trust(creator, True, r_prev, r_curr)
    if suggested:
        creator.trust_true = float(np.clip(creator.trust_true - penalty, 0.0, 1.0))
    return creator.trust_true
