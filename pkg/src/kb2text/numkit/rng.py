"""Seeded, splittable random number generation.

All randomness in the package flows through numpy SeedSequence spawning, so
any run is reproducible from one recorded integer seed and independent
streams never collide.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def split_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """n independent generators derived from one seed."""
    return [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(n)]
