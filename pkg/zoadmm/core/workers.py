from __future__ import annotations

import logging
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

logger = logging.getLogger(__name__)

THREADS_ENV = "ZOADMM_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(override: int | None = None) -> int:
    """Return the worker count: the override (capped by ``ZOADMM_THREADS``), the variable, or 1."""

    cap = _env_cap()
    if override is not None:
        requested = max(1, int(override))
        return requested if cap is None else min(requested, cap)
    return 1 if cap is None else cap


def _env_cap() -> int | None:
    raw = os.getenv(THREADS_ENV, "").strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        logger.warning("%s=%r no es un entero; se usa 1 hilo.", THREADS_ENV, raw)
        return 1
    return max(1, value)


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int | None = None) -> list[R]:
    """Apply *fn* to every item and return results in input order.

    With more than one worker the calls run on a thread pool; the result list
    is always assembled in the order of *items* so later reductions see the
    same operand order whatever the thread count.
    """

    n_workers = resolve_workers(workers)
    if n_workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(n_workers, len(items))) as pool:
        return list(pool.map(fn, items))
