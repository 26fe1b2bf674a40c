"""Seeded, stream-splittable random generators.

All randomness goes through numpy's PCG64 bit generator seeded from a
``SeedSequence``; independent streams come from ``SeedSequence.spawn``.
"""
from __future__ import annotations

import numpy as np

RNG_IDENTITY = f"numpy-{np.__version__}/PCG64/SeedSequence"


def make_rng(seed) -> np.random.Generator:
    """Return a Generator for an int seed, SeedSequence, or pass a Generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def spawn(seed, k: int) -> list[np.random.Generator]:
    """k independent generators derived deterministically from ``seed``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return [np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(k)]


def child_seeds(seed: int, k: int) -> list[int]:
    """k derived integer seeds (used where a plain int must be echoed into reports)."""
    ss = np.random.SeedSequence(int(seed))
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in ss.spawn(k)]
