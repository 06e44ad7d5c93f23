"""Index-addressed parallel map.

Work is split into contiguous index chunks and results are written back by index,
so the output never depends on the number of workers or their scheduling. The
compiled kernels release the GIL, which is what makes threads worthwhile here.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np


def default_threads() -> int:
    env = os.environ.get("QCAROBUST_THREADS")
    if env:
        return max(1, int(env))
    return 1


def map_indices(func: Callable[[int], object], count: int, threads: int | None = None,
                dtype=np.uint8, chunk: int = 256) -> np.ndarray:
    """``np.array([func(i) for i in range(count)])`` computed on ``threads`` workers."""
    threads = default_threads() if threads is None else max(1, int(threads))
    first = func(0) if count else None
    probe = np.asarray(first, dtype=dtype)
    out = np.empty((count,) + probe.shape, dtype=dtype)
    if count == 0:
        return out
    out[0] = probe

    def run(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            out[i] = func(i)

    bounds = [(lo, min(lo + chunk, count)) for lo in range(1, count, chunk)]
    if threads == 1 or len(bounds) <= 1:
        for lo, hi in bounds:
            run(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for f in [pool.submit(run, lo, hi) for lo, hi in bounds]:
                f.result()
    return out
