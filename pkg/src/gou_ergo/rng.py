"""Counter-based random streams for reproducible parallel Monte Carlo.

Paths are simulated in fixed-size blocks.  Block ``k`` of a run with
master seed ``s`` always draws from the Philox stream keyed by
``(s, k)``, so results do not depend on how blocks are spread over
worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 8192
ENV_THREADS = "GOU_ERGO_THREADS"


def stream(seed: int, *index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2 ** 64 - 1), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(ENV_THREADS)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def blocks(n: int, block: int = BLOCK) -> list[tuple[int, int]]:
    """``(start, size)`` of each block covering ``range(n)``."""
    return [(s, min(block, n - s)) for s in range(0, n, block)]


def map_blocks(fn, n: int, seed: int, threads: int | None = None, block: int = BLOCK, tag: int = 0):
    """Run ``fn(rng, size, start)`` per block and return results in block order."""
    jobs = blocks(n, block)

    def run(k):
        start, size = jobs[k]
        return fn(stream(seed, tag, k), size, start)

    nt = min(resolve_threads(threads), len(jobs)) if jobs else 1
    if nt <= 1:
        return [run(k) for k in range(len(jobs))]
    with ThreadPoolExecutor(nt) as ex:
        return list(ex.map(run, range(len(jobs))))
