"""
Reproducible random streams.

Graph rows use a counter-based Philox generator keyed by (seed, row), so
the content of a row never depends on the order in which rows are built or
on how many workers build them. Everything else (walks, replicas, Monte
Carlo batches) draws from SeedSequence-derived streams tagged by purpose.
"""

from typing import Tuple

import numpy as np

MASK64 = (1 << 64) - 1

# Stream tags; the first spawn-key word separates purposes.
TAG_WALK = 1
TAG_REPLICA = 2
TAG_MONTE_CARLO = 3
TAG_ANNEALED_RUN = 4
TAG_NAIVE_SAMPLER = 5
TAG_STARTS = 6
TAG_PROFILE = 7


def normalize_seed(seed: int) -> int:
    """Reduce an arbitrary integer seed to 64 bits."""
    return int(seed) & MASK64


def row_generator(seed: int, row: int) -> np.random.Generator:
    """Generator for one adjacency row: Philox with key (seed, row), counter 0."""
    key = np.array([normalize_seed(seed), int(row) & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def stream(seed: int, *tags: int) -> np.random.Generator:
    """Independent generator for a tagged sub-stream of ``seed``."""
    sequence = np.random.SeedSequence(
        entropy=normalize_seed(seed), spawn_key=tuple(int(t) for t in tags)
    )
    return np.random.Generator(np.random.PCG64(sequence))


def derive_seed(seed: int, *tags: int) -> int:
    """64-bit child seed, e.g. the graph seed of replica ``r``."""
    sequence = np.random.SeedSequence(
        entropy=normalize_seed(seed), spawn_key=tuple(int(t) for t in tags)
    )
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def replica_seeds(seed: int, replicas: int) -> Tuple[int, ...]:
    """Graph seeds for replicas 0..replicas-1."""
    return tuple(derive_seed(seed, TAG_REPLICA, r) for r in range(replicas))
