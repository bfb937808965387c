"""Keyed, counter-based random streams.

Each stream is a Philox generator keyed by a master seed plus a tuple of
integers such as (purpose, receiver, chunk).  Samples are produced in fixed
size chunks, so the value drawn for a given sample index never depends on how
the work was split between workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

# stream purposes, first element of every key
CHANNEL = 1
PHENOM = 2
PE_MC = 3
MI_MC = 4
SWEEP = 5

CHANNEL_CHUNK = 1024
MC_CHUNK = 1 << 15


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for ``(seed, *key)``; same key, same draws."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit child seed, used to hand independent seeds to sweep points."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def complex_normal(seed: int, var: float, key: Sequence[int], start: int, count: int,
                   chunk: int = CHANNEL_CHUNK) -> np.ndarray:
    """Circularly symmetric complex Gaussian draws for indices [start, start+count).

    E|z|^2 = var, each real component has variance var/2.  Index ``j`` always
    maps to the same value: it is taken from chunk ``j // chunk`` of the stream
    keyed by ``(*key, j // chunk)``.
    """
    if count <= 0:
        return np.zeros(0, dtype=complex)
    first, last = start // chunk, (start + count - 1) // chunk
    parts = []
    for c in range(first, last + 1):
        g = stream(seed, *key, c).standard_normal((chunk, 2))
        parts.append(g[:, 0] + 1j * g[:, 1])
    z = np.concatenate(parts)[start - first * chunk: start - first * chunk + count]
    return z * np.sqrt(var / 2.0)


def chunk_sizes(total: int, chunk: int = MC_CHUNK) -> list[int]:
    full, rest = divmod(int(total), chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_ordered(fn: Callable[[int], T], n: int, threads: int = 1) -> list[T]:
    """Evaluate ``fn(0..n-1)``, possibly in threads, returning results in index order."""
    if threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))
