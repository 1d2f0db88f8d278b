"""Deterministic fan-out helper.

Candidate evaluation is embarrassingly parallel; SWEEPCERT_THREADS caps the
worker count.  Results always come back in input order, so reports are
identical no matter how the work was scheduled.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count(n_jobs: int) -> int:
    cap = os.environ.get("SWEEPCERT_THREADS")
    limit = os.cpu_count() or 1
    if cap is not None:
        try:
            limit = max(1, int(cap))
        except ValueError:
            limit = 1
    return max(1, min(n_jobs, limit))


def ordered_map(fn: Callable[[T], R], jobs: Sequence[T]) -> list[R]:
    workers = worker_count(len(jobs))
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))
