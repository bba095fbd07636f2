from functools import partial
from itertools import chain

MYPY = False
if MYPY:
    from typing import Callable, Dict, Iterable, Iterator, List, Optional, TypeVar
    T = TypeVar('T')
    K = TypeVar('K')


filter_ = partial(filter, None)  # type: Callable[[Iterable[Optional[T]]], Iterator[T]]  # type: ignore[assignment]
flatten = chain.from_iterable


def maybe(fn):
    # type: (Callable[[], T]) -> Optional[T]
    try:
        return fn()
    except Exception:
        return None


def group_by(key, iterable):
    # type: (Callable[[T], K], Iterable[T]) -> Dict[K, List[T]]
    """Group items by `key`, keeping first-seen key order and item order."""
    rv = {}  # type: Dict[K, List[T]]
    for item in iterable:
        rv.setdefault(key(item), []).append(item)
    return rv
