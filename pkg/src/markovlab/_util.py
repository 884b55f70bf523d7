"""Small shared helpers: thread budget and deterministic parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    """Parallelism budget; the MARKOVLAB_THREADS env var caps it."""
    cpus = os.cpu_count() or 1
    raw = os.environ.get("MARKOVLAB_THREADS")
    if raw is None:
        return cpus
    try:
        return max(1, min(cpus, int(raw)))
    except ValueError:
        return cpus


def thread_map(fn, items):
    """Map preserving order; parallel only when the budget allows.

    Results are gathered by index, so the output is deterministic
    regardless of completion order.
    """
    items = list(items)
    workers = min(worker_count(), len(items)) or 1
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
