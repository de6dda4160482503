"""Chunked, order-preserving parallel map for the data-parallel stages.

Workers are forked so heavyweight read-only state (matchers, rule sets) is
inherited rather than pickled. Results come back in chunk order, so output
is byte-identical to a serial run regardless of worker count. Stages fall
back to serial execution when the input is too small to amortize the pool
or when only one worker is allowed.
"""

from __future__ import annotations

import itertools
import logging
import multiprocessing
import os
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_CHUNK = 10_000


def default_threads() -> int:
    return os.cpu_count() or 1


def chunked(items: Iterable[T], size: int) -> Iterator[list[T]]:
    it = iter(items)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield block


def chunked_map(
    fn: Callable[[Sequence[T]], R],
    items: Iterable[T],
    threads: int,
    chunk_size: int = DEFAULT_CHUNK,
) -> Iterator[R]:
    """Applies ``fn`` to chunks of ``items``, in order.

    ``fn`` must be picklable only in spawn environments; on fork platforms a
    closure over pre-built state is fine.
    """
    chunks = chunked(items, chunk_size)
    if threads <= 1:
        for block in chunks:
            yield fn(block)
        return
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:
        log.warning("fork unavailable; running single-threaded")
        for block in chunks:
            yield fn(block)
        return
    first = list(itertools.islice(chunks, 2))
    if len(first) < 2:
        # one chunk: the pool would cost more than it saves
        for block in first:
            yield fn(block)
        return
    with ctx.Pool(processes=threads) as pool:
        for result in pool.imap(fn, itertools.chain(first, chunks)):
            yield result
