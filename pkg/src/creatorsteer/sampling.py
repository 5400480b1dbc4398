"""Shared sampling helpers."""

from __future__ import annotations

import math


def sample_truncated_gaussian(mu: float, sigma: float, lo: float, hi: float, rng) -> float:
    """One draw from Normal(mu, sigma^2) conditioned on [lo, hi].

    Rejection sampling; raises if the acceptance probability of the parent
    normal is below 1e-6 (the loop would effectively never terminate).
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if sigma <= 0:
        raise ValueError("need sigma > 0")
    z_lo = (lo - mu) / sigma
    z_hi = (hi - mu) / sigma
    accept = 0.5 * (math.erf(z_hi / math.sqrt(2)) - math.erf(z_lo / math.sqrt(2)))
    if accept < 1e-6:
        raise ValueError(f"truncated gaussian acceptance probability {accept:.2e} below 1e-6")
    while True:
        x = rng.normal(mu, sigma)
        if lo <= x <= hi:
            return float(x)
