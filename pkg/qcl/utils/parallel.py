from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from qcl.core.config import settings

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Map ``fn`` over ``items`` on up to ``threads`` workers.

    Results come back in input order so callers can reduce deterministically.
    """
    threads = threads or settings.DEFAULT_THREADS
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sequential_sum(arrays: Iterable, start=0.0):
    """Left-to-right sum; fixed order keeps float reductions reproducible."""
    total = start
    for arr in arrays:
        total = total + arr
    return total
