"""Optional thread-pool map, capped by the ``QDILATE_THREADS`` environment variable."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    try:
        n = int(os.environ.get("QDILATE_THREADS", "1"))
    except ValueError:
        n = 1
    return max(n, 1)


def pmap(fn, items):
    """``list(map(fn, items))``, threaded when ``QDILATE_THREADS > 1``."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
