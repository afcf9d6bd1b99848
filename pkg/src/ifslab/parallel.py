"""Ordered parallel map used by scans.

Results are returned in input order, so output never depends on scheduling.
The heavy kernels release the GIL, which makes a thread pool worthwhile.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def default_threads() -> int:
    env = os.environ.get("IFSLAB_THREADS", "")
    if env.strip():
        n = int(env)
        if n < 1:
            raise ValueError("IFSLAB_THREADS must be positive")
        return n
    return os.cpu_count() or 1


def pmap(fn, items, threads=None):
    items = list(items)
    n = default_threads() if threads is None else int(threads)
    if n < 1:
        raise ValueError("threads must be positive")
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))
