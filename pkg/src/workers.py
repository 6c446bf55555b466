"""Process pool shared by the Monte Carlo drivers and sweeps."""
import logging
import os
from multiprocessing import Pool
from typing import Callable, Iterable, List, Optional, TypeVar

from .constants import THREADS_ENV
from .errors import PreconditionError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    """Worker count from the environment, 1 when unset."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        count = int(raw)
    except ValueError:
        raise PreconditionError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, count)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """Apply ``fn`` to every item and return the results in input order."""
    items = list(items)
    threads = thread_count() if threads is None else max(1, threads)
    if threads == 1 or len(items) < 2:
        return [fn(item) for item in items]
    logger.debug("mapping %d tasks over %d processes", len(items), threads)
    with Pool(processes=min(threads, len(items))) as pool:
        return pool.map(fn, items)
