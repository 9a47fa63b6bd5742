"""Thread fan-out for per-cell and per-point work.

Results come back in input order, so output never depends on scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_threads: int | None = None


def set_threads(threads: int | None) -> None:
    """Set the process-wide worker count (0 or None = auto)."""
    global _threads
    _threads = threads


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = _threads
    if threads is None:
        env = os.environ.get("CBDOM_THREADS", "").strip()
        threads = int(env) if env.isdigit() else 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def parallel_map(fn: Callable[[T], R], items: Iterable[T],
                 threads: int | None = None) -> list[R]:
    items = list(items)
    n = min(resolve_threads(threads), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
