from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from utils.logger import get_logger

logger = get_logger('workers')

T = TypeVar('T')
R = TypeVar('R')

# Below this many items per worker the pool costs more than it saves
MIN_ITEMS_PER_WORKER = 2000


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """Map fn over items, fanning out to worker processes; result order follows input order.

    fn must be picklable (a module-level function or a functools.partial of one).
    """
    workers = min(threads, max(1, len(items) // MIN_ITEMS_PER_WORKER))
    if workers <= 1:
        return [fn(item) for item in items]

    chunksize = max(1, len(items) // (workers * 4))
    logger.debug("Worker pool started", workers=workers, items=len(items), chunksize=chunksize)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
