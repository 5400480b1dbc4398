"""Non-learned suggestion strategies.

A platform action is one suggestion id per creator: 0 means "no
suggestion", i >= 1 means "produce genre i-1". All strategies here are
pure functions of the world state.
"""

from __future__ import annotations

import numpy as np

from .config import ConfigError
from .creators import CreatorRecord
from .ecosystem import EcosystemState


def no_signal(state: EcosystemState) -> np.ndarray:
    """Reveal nothing: the all-zeros action."""
    return np.zeros(state.n_creators, dtype=np.int64)


def most_click_action(genre_click_totals: np.ndarray, n_creators: int) -> np.ndarray:
    """Suggest everyone the genre with the most cumulative clicks.

    Ties resolve to the lowest genre index; an empty log yields no
    suggestion at all.
    """
    totals = np.asarray(genre_click_totals)
    if totals.sum() == 0:
        return np.zeros(n_creators, dtype=np.int64)
    best = int(np.argmax(totals))  # argmax returns the first (lowest) index on ties
    return np.full(n_creators, best + 1, dtype=np.int64)


def most_click(state: EcosystemState) -> np.ndarray:
    return most_click_action(state.genre_click_totals, state.n_creators)


def most_history_click_suggestion(creator: CreatorRecord) -> int:
    """Per-creator best-own-genre suggestion; 0 when there is no history."""
    if not creator.history:
        return 0
    sums: dict[int, int] = {}
    for e in creator.history:
        sums[e.genre] = sums.get(e.genre, 0) + e.clicks
    best = max(sums.items(), key=lambda kv: (kv[1], -kv[0]))
    return best[0] + 1


def most_history_click(state: EcosystemState) -> np.ndarray:
    return np.array([most_history_click_suggestion(c) for c in state.creators], dtype=np.int64)


class Strategy:
    """Callable wrapper so baselines and the learned policy share one shape."""

    tag = "base"

    def propose(self, state: EcosystemState) -> np.ndarray:
        raise NotImplementedError


class NoSignalStrategy(Strategy):
    tag = "none"

    def propose(self, state):
        return no_signal(state)


class MostClickStrategy(Strategy):
    tag = "most_click"

    def propose(self, state):
        return most_click(state)


class MostHistoryClickStrategy(Strategy):
    tag = "most_history_click"

    def propose(self, state):
        return most_history_click(state)


def make_strategy(tag: str) -> Strategy:
    """Baseline strategies only; the learned policy is built by the trainer."""
    strategies = {"none": NoSignalStrategy, "most_click": MostClickStrategy,
                  "most_history_click": MostHistoryClickStrategy}
    if tag not in strategies:
        raise ConfigError(f"unknown strategy tag {tag!r}")
    return strategies[tag]()
