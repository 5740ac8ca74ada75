"""Deterministic seed derivation.

Every random stream is keyed by ``(master_seed, *tags)`` through NumPy's
SeedSequence hash, so results never depend on call order or scheduling.
"""

import numpy as np

MASK64 = (1 << 64) - 1


def _entropy(master_seed: int, tags) -> list[int]:
    return [int(master_seed) & MASK64, *(int(t) for t in tags)]


def derive_rng(master_seed: int, *tags: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_entropy(master_seed, tags))))


def derive_seed(master_seed: int, *tags: int) -> int:
    """A 64-bit child seed for ``(master_seed, *tags)``."""
    lo, hi = np.random.SeedSequence(_entropy(master_seed, tags)).generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
