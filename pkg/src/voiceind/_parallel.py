"""Order-preserving thread map used by the bulk operations."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_threads() -> int:
    return os.cpu_count() or 1


def resolve_threads(threads) -> int:
    if threads is None:
        return default_threads()
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def parallel_map(fn, items, threads=None) -> list:
    """``[fn(x) for x in items]``, optionally spread over a thread pool.

    Results come back in input order regardless of scheduling.
    """
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def chunk_bounds(n: int, parts: int) -> list:
    """Split ``range(n)`` into at most ``parts`` contiguous ``(start, stop)`` spans."""
    parts = max(1, min(parts, n))
    step, extra = divmod(n, parts)
    bounds = []
    start = 0
    for k in range(parts):
        stop = start + step + (1 if k < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds
