from concurrent.futures import Future, ThreadPoolExecutor
from functools import lru_cache
import os
import threading

from . import exceptions


MYPY = False
if MYPY:
    from typing import Any, Callable, Iterable, List, TypeVar
    T = TypeVar('T')
    U = TypeVar('U')


THREADS_ENV = "TODA_SPECTRA_THREADS"
_executor_lock = threading.Lock()


def thread_count():
    # type: () -> int
    """Worker count from TODA_SPECTRA_THREADS; 0 or unset means auto."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        wanted = int(raw)
    except ValueError:
        raise exceptions.ConfigError(
            "{} must be an integer, got {!r}".format(THREADS_ENV, raw), key=THREADS_ENV)
    if wanted < 0:
        raise exceptions.ConfigError(
            "{} must be >= 0, got {}".format(THREADS_ENV, wanted), key=THREADS_ENV)
    return wanted or min(8, os.cpu_count() or 1)


@lru_cache(maxsize=1)
def _executor_for(workers):
    # type: (int) -> ThreadPoolExecutor
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="Worker")


def spectra_executor():
    # type: () -> ThreadPoolExecutor
    with _executor_lock:
        return _executor_for(thread_count())


def run_as_future(fn, *args, **kwargs):
    # type: (Callable[..., T], Any, Any) -> Future[T]
    return spectra_executor().submit(fn, *args, **kwargs)


def parallel_map(fn, items):
    # type: (Callable[[T], U], Iterable[T]) -> List[U]
    """Map `fn` over `items` on the worker pool, keeping input order.

    With a single worker, or when already running on a worker thread,
    the map runs inline so nested calls cannot starve the pool.
    """
    items = list(items)
    if len(items) < 2 or thread_count() == 1 or it_runs_on_worker():
        return [fn(item) for item in items]
    futures = [run_as_future(fn, item) for item in items]
    return [future.result() for future in futures]


def it_runs_on_worker():
    # type: () -> bool
    return threading.current_thread().name.startswith("Worker")
