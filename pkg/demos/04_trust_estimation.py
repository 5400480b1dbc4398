#!/usr/bin/env python3
"""Estimate creator trust from follow/ignore observations.

Ground-truth trust degrees are hidden from the platform; the estimator
sees only "was the suggestion followed" bits and converges to the
empirical follow rate of each creator.
"""

import numpy as np

from creatorsteer.sampling import sample_truncated_gaussian
from creatorsteer.trust import FollowDataset, TrustParams, fit, predict

rng = np.random.default_rng(0)
true_trust = [sample_truncated_gaussian(0.5, 1.0, 0.0, 1.0, rng) for _ in range(8)]

dataset = FollowDataset()
for cid, d in enumerate(true_trust):
    for r in range(120):
        dataset.add(cid, bool(rng.random() < d), round_index=r)

params = fit(dataset, TrustParams.zeros(8), epochs=3000, lr=0.5)
print("creator   true trust   estimate   error")
for cid, d in enumerate(true_trust):
    est = predict(params, cid)
    print(f"{cid:>7}   {d:10.3f}   {est:8.3f}   {abs(est - d):5.3f}")
