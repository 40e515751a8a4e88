"""Reproducible random streams.

Every Monte Carlo draw in the package comes from a Philox (counter-based)
generator keyed by ``(seed, stream, index, block)``. Work is cut into blocks
of fixed size, so a result depends only on the seed and the sample count,
never on how blocks are scheduled across workers.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 1 << 16

# stream identifiers, part of the spawn key
ORIENTATION_MEAN = 0
SHOT = 1


def block_generator(seed: int, stream: int, index: int, block: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=(stream, index, block))
    return np.random.Generator(np.random.Philox(ss))


def block_sizes(samples: int, block_size: int = BLOCK_SIZE) -> list[int]:
    full, rest = divmod(samples, block_size)
    return [block_size] * full + ([rest] if rest else [])
