"""Welfare and ecosystem-health measurements over run logs."""

from __future__ import annotations

import numpy as np


def cumulative_clicks(rewards) -> np.ndarray:
    """Prefix sums of per-round rewards."""
    return np.cumsum(np.asarray(list(rewards), dtype=np.int64))


def diversity(genre_counts) -> float:
    """Shannon entropy (bits) of the genre distribution, with 0*log(0) := 0.

    Base 2 puts the maximum at log2(n_genres).
    """
    counts = np.asarray(genre_counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("genre counts must be nonnegative")
    total = counts.sum()
    if total == 0:
        raise ValueError("diversity is undefined for all-zero counts")
    p = counts / total
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def active_creators(event_log) -> float:
    """Mean over rounds of the number of creators that created that round."""
    rounds = list(event_log)
    if not rounds:
        return 0.0
    return float(np.mean([len(rec["created"]) for rec in rounds]))


def genres_per_creator(creator_histories: dict) -> dict:
    """Distinct produced genres per creator id.

    `creator_histories` maps creator id to an iterable of genre ids.
    """
    return {cid: len(set(genres)) for cid, genres in creator_histories.items()}


def genre_counts_from_event_log(event_log, n_genres: int) -> np.ndarray:
    """Created-item counts per genre over the whole log."""
    counts = np.zeros(n_genres, dtype=np.int64)
    for rec in event_log:
        for entry in rec["created"]:
            counts[entry["genre"]] += 1
    return counts
