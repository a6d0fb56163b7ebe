"""Seeded random streams.

Every stochastic operation takes an integer seed.  Work split into shards
(blocks of trials) draws shard ``i`` from ``derive_seed(seed, i)``:

    derive_seed(seed, i) = splitmix64(splitmix64(seed) XOR i)

so results never depend on how many worker threads are used.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

MASK64 = (1 << 64) - 1
SHARD_SIZE = 8192


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    return splitmix64(splitmix64(int(seed) & MASK64) ^ (int(index) & MASK64))


def generator(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & MASK64)


def shard_sizes(n: int, shard_size: int = SHARD_SIZE) -> list[int]:
    full, rest = divmod(n, shard_size)
    return [shard_size] * full + ([rest] if rest else [])


def map_shards(fn, n: int, seed: int, jobs: int = 1, shard_size: int = SHARD_SIZE) -> list:
    """Call ``fn(rng, size)`` once per shard and return the results in shard order."""
    sizes = shard_sizes(n, shard_size)
    tasks = [(generator(derive_seed(seed, i)), s) for i, s in enumerate(sizes)]
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(rng, s) for rng, s in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def categorical(rng: np.random.Generator, probs, size: int) -> np.ndarray:
    """Draw ``size`` indices from the probability vector ``probs``."""
    cdf = np.cumsum(np.asarray(probs, dtype=float))
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return np.minimum(idx, len(cdf) - 1)
