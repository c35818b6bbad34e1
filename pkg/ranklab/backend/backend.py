# ranklab/backend/backend.py

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "RANKLAB_THREADS"

_threads = None     # resolved lazily


def _default_threads() -> int:
    raw = os.environ.get(ENV_THREADS)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{ENV_THREADS} must be a positive integer, got '{raw}'")
        if n < 1:
            raise ValueError(f"{ENV_THREADS} must be a positive integer, got '{raw}'")
        return n
    return os.cpu_count() or 1


def set_threads(n: int | None):
    """Set the worker count; `None` restores env/machine default."""
    global _threads

    if n is None:
        _threads = None
        return

    n = int(n)
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    _threads = n


def get_threads() -> int:
    if _threads is None:
        return _default_threads()
    return _threads


def parallel_map(fun: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Map `fun` over `items`, returning results in input order.

    Work items are fixed by the caller, so results (and any reduction the
    caller performs over them in order) do not depend on the worker count.
    """
    items = list(items)
    n = min(get_threads(), len(items))
    if n <= 1:
        return [fun(x) for x in items]

    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fun, items))
