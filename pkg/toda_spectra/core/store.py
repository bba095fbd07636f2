import threading

from .utils import Cache


MYPY = False
if MYPY:
    from typing import Any, Callable, Dict, Hashable, TypeVar
    T = TypeVar('T')


cache = Cache(maxsize=256)  # type: Dict[Hashable, Any]
lock = threading.Lock()
_pending = {}  # type: Dict[Hashable, threading.Lock]


def cached(key, fn):
    # type: (Hashable, Callable[[], T]) -> T
    """Return the memoized result of `fn` under `key`, computing it at most once."""
    with lock:
        try:
            return cache[key]
        except KeyError:
            key_lock = _pending.setdefault(key, threading.Lock())

    with key_lock:
        with lock:
            if key in cache:
                return cache[key]
        value = fn()
        with lock:
            cache[key] = value
            _pending.pop(key, None)
        return value


def clear():
    # type: () -> None
    with lock:
        cache.clear()
        _pending.clear()
