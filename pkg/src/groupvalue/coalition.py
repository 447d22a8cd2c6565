"""Bitmask helpers for coalitions.

A coalition over players ``0..n-1`` is a plain ``int`` whose bit ``i`` is set
when player ``i`` belongs to it. Array-valued helpers use ``numpy.int64``
masks (``n <= 25`` whenever a full table is involved).
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

MAX_PLAYERS = 64
EXACT_LIMIT = 25


def full(n: int) -> int:
    """Mask of the grand coalition on ``n`` players."""
    return (1 << n) - 1


def size(mask: int) -> int:
    return mask.bit_count()


def members(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def from_members(players: Iterable[int]) -> int:
    mask = 0
    for p in players:
        if p < 0 or p >= MAX_PLAYERS:
            raise ValueError(f"player index {p} outside 0..{MAX_PLAYERS - 1}")
        mask |= 1 << p
    return mask


def contains(mask: int, player: int) -> bool:
    return (mask >> player) & 1 == 1


def is_subset(a: int, b: int) -> bool:
    return a & ~b == 0


def check_within(mask: int, n: int) -> None:
    if mask < 0 or mask & ~full(n):
        raise ValueError(f"coalition {mask:#x} is not a subset of the {n}-player universe")


def submasks(mask: int) -> Iterator[int]:
    """Every subset of ``mask``, including ``0`` and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def squeeze(mask: int, kept: int) -> int:
    """Re-index the bits of ``mask`` lying in ``kept`` onto ``0..|kept|-1``."""
    out = 0
    k = 0
    while kept:
        low = kept & -kept
        if mask & low:
            out |= 1 << k
        k += 1
        kept ^= low
    return out


def spread(mask: int, kept: int) -> int:
    """Inverse of :func:`squeeze`: place bit ``k`` onto the ``k``-th member of ``kept``."""
    out = 0
    k = 0
    while kept:
        low = kept & -kept
        if (mask >> k) & 1:
            out |= low
        k += 1
        kept ^= low
    return out


@lru_cache(maxsize=32)
def popcounts(n: int) -> np.ndarray:
    """Cardinality of every mask in ``0..2**n - 1``."""
    counts = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        counts[1 << i: 1 << (i + 1)] = counts[: 1 << i] + 1
    counts.flags.writeable = False
    return counts


def all_masks(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def subset_unions(units) -> np.ndarray:
    """``out[m]`` is the union of ``units[k]`` over the bits ``k`` of ``m``, for every ``m``.

    Built by doubling, so the whole table costs one OR per entry.
    """
    out = np.zeros(1 << len(units), dtype=np.int64)
    for k, unit in enumerate(units):
        out[1 << k: 2 << k] = out[: 1 << k] | int(unit)
    return out


def format_mask(mask: int, labels: list[str] | None = None) -> str:
    names = [labels[i] if labels else str(i) for i in members(mask)]
    return "{" + ",".join(names) + "}"
