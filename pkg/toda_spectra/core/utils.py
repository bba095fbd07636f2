from collections import OrderedDict
from contextlib import contextmanager
import time
import traceback

from ..common import util


MYPY = False
if MYPY:
    from typing import Iterator, Type


class timer:
    def __init__(self):
        self._start_time = time.perf_counter()

    def elapsed(self):
        # type: () -> float
        return time.perf_counter() - self._start_time


@contextmanager
def eat_but_log_errors(exception=Exception):
    # type: (Type[Exception]) -> Iterator[None]
    try:
        yield
    except exception as e:
        traceback.print_exc()
        util.debug.log_error(e)


class Cache(OrderedDict):
    """LRU mapping holding at most `maxsize` entries."""

    def __init__(self, maxsize=128):
        assert maxsize > 0
        self.maxsize = maxsize
        super().__init__()

    def __getitem__(self, key):
        value = super().__getitem__(key)
        self.move_to_end(key)
        return value

    def __setitem__(self, key, value):
        if key in self:
            self.move_to_end(key)
        super().__setitem__(key, value)
        if len(self) > self.maxsize:
            self.popitem(last=False)
