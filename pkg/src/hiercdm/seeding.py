"""Deterministic seed derivation for nested simulation streams."""

from __future__ import annotations

import numpy as np


def derive_seed(master, *path: int):
    """Stable child seed for a (master, path) combination.

    Returns None when the master seed is None, so unseeded runs stay
    unseeded. Identical arguments always give the identical child
    seed, which makes serial and parallel execution interchangeable.
    """
    if master is None:
        return None
    entropy = (int(master),) + tuple(int(x) for x in path)
    seq = np.random.SeedSequence(entropy)
    return int(seq.generate_state(1, np.uint64)[0])
