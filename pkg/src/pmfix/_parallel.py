import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    """Worker cap from PMFIX_THREADS (0 or unset means one per CPU)."""
    try:
        n = int(os.environ.get("PMFIX_THREADS", "0"))
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def pmap(fn, items):
    """Order-preserving map; runs inline when only one worker is allowed."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
