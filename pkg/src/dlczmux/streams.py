"""Counter-based random streams for reproducible parallel Monte Carlo.

Every block of work draws from a generator keyed by ``(master_seed, *key,
block_index)``.  Block boundaries depend only on the workload, never on the
number of worker threads, so results are bitwise identical for any
``workers`` value.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

DEFAULT_BLOCK = 1 << 16


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``seed`` and an integer key path."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def block_sizes(n_items: int, block_size: int = DEFAULT_BLOCK) -> list[int]:
    if n_items < 0:
        raise ValueError("n_items must be non-negative")
    if block_size < 1:
        raise ValueError("block_size must be positive")
    full, rest = divmod(n_items, block_size)
    return [block_size] * full + ([rest] if rest else [])


def map_blocks(
    fn: Callable[[int, np.random.Generator], T],
    n_items: int,
    seed: int,
    key: Sequence[int],
    block_size: int = DEFAULT_BLOCK,
    workers: int = 1,
) -> list[T]:
    """Run ``fn(count, rng)`` over fixed-size blocks, results in block order."""
    sizes = block_sizes(n_items, block_size)
    jobs = [(n, stream(seed, *key, i)) for i, n in enumerate(sizes)]
    if workers <= 1 or len(jobs) <= 1:
        return [fn(n, rng) for n, rng in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
