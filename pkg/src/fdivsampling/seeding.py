"""Seed splitting and optional parallel fan-out.

``child_seed(seed, tag, index)`` is the first 8 bytes (little endian) of
``blake2b(f"{seed}:{tag}:{index}", digest_size=8)``.  Independent streams
(trials, replicates, the learner and the adversary of one game) get
distinct tags or indices, so results never depend on scheduling order.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

__all__ = ["child_seed", "child_rng", "thread_count", "parallel_map"]

T = TypeVar("T")
R = TypeVar("R")


def child_seed(seed: int, tag: str, index: int = 0) -> int:
    digest = hashlib.blake2b(f"{int(seed)}:{tag}:{int(index)}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def child_rng(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(child_seed(seed, tag, index))


def thread_count() -> int:
    """Worker cap from ``FDIV_THREADS``: unset means 1, ``0`` means one per CPU."""
    raw = os.environ.get("FDIV_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 0:
        raise ValueError("FDIV_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Order-preserving map; uses processes when more than one worker is allowed."""
    items = list(items)
    workers = thread_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
