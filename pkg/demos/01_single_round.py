#!/usr/bin/env python3
"""Walk through one interaction round by hand.

Builds a small world, sends a couple of suggestions, and prints what the
creators made, what users clicked, and how the observation for the next
round looks.
"""

import numpy as np

import creatorsteer as cs
from creatorsteer.config import RunConfig
from creatorsteer.ecosystem import build_state, observe, step
from creatorsteer.recommender import OracleAffinity

config = RunConfig.from_dict({
    "seed": 7,
    "populations": {
        "creators": 4, "users": 6, "genres": 3, "k": 2,
        "user_affinity": {"noise_sd": 0.05},
    },
    "click_model": {"bias": -1.0, "affinity_weight": 2.5, "quality_weight": 1.0},
})

state = build_state(config)
print(f"world: {state.n_creators} creators, {len(state.users)} users, "
      f"{state.n_genres} genres")
for c in state.creators:
    print(f"  creator {c.id}: trust={c.trust_true:.2f} activity={c.activity_prob}")

# suggestion ids: 0 = say nothing, g+1 = "produce genre g"
action = np.array([1, 0, 3, 2])
print(f"\nplatform action: {action.tolist()}")

result = step(state, action, OracleAffinity())
print(f"reward (total clicks): {result.reward}")
for entry in result.record["created"]:
    tag = "followed" if entry["followed"] else "own choice"
    print(f"  creator {entry['creator']} produced genre {entry['genre']} ({tag})")
for click in result.record["clicks"]:
    print(f"  user {click['user']} clicked item {click['item']}")

obs = observe(state, trust_estimates=np.full(state.n_creators, 0.5))
print(f"\nnext observation genres: {obs.genres.tolist()}  (-1 = created nothing)")
