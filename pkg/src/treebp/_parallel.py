"""Deterministic chunked parallelism for sample-based estimators.

Work is cut into fixed logical chunks before any worker pool is involved;
each chunk derives its RNG stream from the master seed and its own chunk
index, and results are reduced in chunk order.  Estimates are therefore
bit-identical for any worker count, including the serial path.
"""

from __future__ import annotations

import multiprocessing
import os

__all__ = ["chunk_plan", "parallel_chunk_map"]


def chunk_plan(n_items: int, chunk_size: int) -> list[tuple[int, int, int]]:
    """(start, count, chunk_index) triples covering range(n_items)."""
    if n_items < 1:
        raise ValueError("n_items must be positive")
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    plan = []
    start = 0
    index = 0
    while start < n_items:
        count = min(chunk_size, n_items - start)
        plan.append((start, count, index))
        start += count
        index += 1
    return plan


def parallel_chunk_map(task, n_items: int, chunk_size: int, workers: int | None = None) -> list:
    """Run task(start, count, chunk_index) over every chunk, in chunk order.

    task must be picklable (a module-level function or functools.partial of
    one) when workers > 1.  workers=None uses os.cpu_count().
    """
    chunks = chunk_plan(n_items, chunk_size)
    if workers is None or workers <= 0:
        workers = os.cpu_count() or 1
    workers = min(workers, len(chunks))
    if workers == 1:
        return [task(start, count, index) for start, count, index in chunks]
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:
        ctx = multiprocessing.get_context()
    with ctx.Pool(workers) as pool:
        return pool.starmap(task, chunks, chunksize=max(1, len(chunks) // (4 * workers)))
