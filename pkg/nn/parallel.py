"""Intra-op parallelism over independent output rows.

The worker count is scoped with `intra_op_threads(n)`; numpy releases the GIL inside its
kernels, so row bands of one convolution run concurrently. Workers start with the default
count of 1, so nested ops stay serial.
"""
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from contextvars import ContextVar
from functools import lru_cache
from typing import Callable, Iterator, List, Tuple

import numpy as np

from exceptions import ArgumentError

_THREADS: ContextVar[int] = ContextVar("intra_op_threads", default=1)


def current_threads() -> int:
    return _THREADS.get()


@contextmanager
def intra_op_threads(threads: int) -> Iterator[int]:
    if threads < 1:
        raise ArgumentError(f"thread count must be >= 1, got {threads}")
    token = _THREADS.set(threads)
    try:
        yield threads
    finally:
        _THREADS.reset(token)


@lru_cache(maxsize=None)
def _pool(threads: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=threads, thread_name_prefix="edgevit-op")


def row_bands(rows: int, parts: int) -> List[Tuple[int, int]]:
    """Split [0, rows) into at most `parts` contiguous, near-equal bands."""
    edges = np.linspace(0, rows, min(parts, rows) + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def map_row_bands(fn: Callable[[int, int], np.ndarray], rows: int, axis: int = 1) -> np.ndarray:
    """Evaluate fn(start, stop) per band with the scoped worker count and stitch along axis."""
    threads = current_threads()
    if threads == 1 or rows < 2:
        return fn(0, rows)
    parts = list(_pool(threads).map(lambda band: fn(*band), row_bands(rows, threads)))
    return np.concatenate(parts, axis=axis)
