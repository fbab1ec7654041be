"""Bounded worker pool for independent solver jobs (rotations, columns, pairs)."""
from __future__ import annotations
import asyncio
from typing import Callable, Iterable, TypeVar
import psutil

T = TypeVar("T")
R = TypeVar("R")

_default_threads: int | None = None


def set_default_threads(n: int | None) -> None:
    global _default_threads
    _default_threads = n if n and n > 0 else None


def default_threads() -> int:
    if _default_threads:
        return _default_threads
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def map_concurrent(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Apply `fn` to every item; results come back in input order."""
    items = list(items)
    n = threads if threads is not None else default_threads()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]

    async def _run() -> list[R]:
        sem = asyncio.Semaphore(n)

        async def one(x: T) -> R:
            async with sem:
                return await asyncio.to_thread(fn, x)

        return list(await asyncio.gather(*(one(x) for x in items)))

    return asyncio.run(_run())
