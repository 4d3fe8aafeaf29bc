"""Small shared utilities: deterministic seed derivation and a parallel map.

Seed derivation uses the splitmix64 finalizer, so replicate seeds are
decorrelated, stable across platforms, and independent of execution order.
"""

from __future__ import annotations

import concurrent.futures
from typing import Callable, Iterable, List, Sequence, TypeVar

T = TypeVar("T")
U = TypeVar("U")

__all__ = ["mix_seed", "parallel_map"]

_MASK = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed, order-sensitively."""
    acc = 0x243F6A8885A308D3
    for part in parts:
        acc = _splitmix64((acc ^ (int(part) & _MASK)) & _MASK)
    return acc


def parallel_map(fn: Callable[[T], U], items: Sequence[T],
                 jobs: int = 1) -> List[U]:
    """Map preserving input order; jobs > 1 uses a thread pool.

    Threads rather than processes so closures work and numpy-heavy work
    still overlaps; callers that need real process isolation handle it
    themselves.
    """
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
