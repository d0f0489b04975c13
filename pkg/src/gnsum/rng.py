"""Counter-based random streams.

All randomness flows through :func:`stream`, which keys a Philox generator by
``(seed, *path)``.  Two calls with the same key always produce the same
numbers, regardless of which worker or in which order they run, so parallel
and serial runs are bit-identical.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator for the stream addressed by ``path``."""
    if seed < 0 or any(p < 0 for p in path):
        raise ValueError("seed and stream keys must be non-negative integers")
    ss = np.random.SeedSequence([int(seed), *(int(p) for p in path)])
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """A 63-bit integer seed for a child stream, for APIs that take plain ints."""
    ss = np.random.SeedSequence([int(seed), *(int(p) for p in path)])
    return int(ss.generate_state(2, np.uint32).view(np.uint64)[0] >> np.uint64(1))
