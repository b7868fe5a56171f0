"""Addressable random streams.

Every random draw in the package comes from a stream identified by
``(seed, key...)``.  Work is cut into fixed-size chunks with their own keys, so
results never depend on how many workers processed the chunks.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_SEED = 0
CHUNK = 1 << 16


def default_seed() -> int:
    return int(os.environ.get("GRAPHONLAB_SEED", DEFAULT_SEED))


def stream(seed: int | None, *key: int) -> np.random.Generator:
    seed = default_seed() if seed is None else int(seed)
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(total: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(int(total), chunk)
    return [chunk] * full + ([rest] if rest else [])


def run_chunks(fn, n_chunks: int, workers: int = 1) -> list:
    """Evaluate ``fn(i)`` for every chunk index, returning results in index order."""
    if workers <= 1 or n_chunks <= 1:
        return [fn(i) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_chunks)))
