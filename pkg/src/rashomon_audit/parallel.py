"""Order-preserving process-pool map.

Jobs carry every input they need (including derived seeds), so output is
identical for any worker count.
"""
import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "RASHOMON_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        return max(1, int(raw))
    return 1


def _init_worker():
    # one BLAS thread per process; the pool supplies the parallelism
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")


def pmap(fn, items, workers=None, chunksize=1):
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items)), initializer=_init_worker) as ex:
        return list(ex.map(fn, items, chunksize=chunksize))
