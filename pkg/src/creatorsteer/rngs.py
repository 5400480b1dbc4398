"""Named, independently seeded random streams.

Every stochastic subsystem (creator activity, user activity, clicks, ...)
draws from its own PCG64 generator keyed by name, so adding a subsystem or
changing how often one of them samples never perturbs the draws of the
others. All streams derive deterministically from a single run seed.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_seed(seed: int, name: str) -> np.random.SeedSequence:
    """Seed sequence for stream `name`, stable across runs and platforms."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return np.random.SeedSequence([seed, int.from_bytes(digest[:8], "little")])


def stream_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(stream_seed(seed, name))


class RngStreams:
    """Lazy registry of named generators for one simulation run."""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            self._streams[name] = stream_rng(self.seed, name)
        return self._streams[name]

    def state(self) -> dict:
        """Serializable state of every stream touched so far."""
        return {name: g.bit_generator.state for name, g in sorted(self._streams.items())}

    def restore(self, states: dict) -> None:
        for name, st in states.items():
            self.get(name).bit_generator.state = st
