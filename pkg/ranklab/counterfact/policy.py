"""Ranking policies and the per-search re-ranking they induce.

All functions work on a whole SlotTable at once: every search's slots are
contiguous rows, and orders inside a search come from one `np.lexsort` with
the search index as primary key.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..backend import keyed_uniform, stream_key
from ..src._typing import FloatArray, IntArray
from ..src.errors import UsageError

STATUS_QUO = "status_quo"
PERSONALIZED = "personalized"
RANDOM = "random"
BLEND = "blend"
VARIANTS = (STATUS_QUO, PERSONALIZED, RANDOM, BLEND)


@dataclass(frozen=True)
class RankingPolicy:
    variant: str
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise UsageError(f"unknown policy '{self.variant}'; choose from {VARIANTS}")
        if self.variant == BLEND:
            if self.alpha is None or not 0.0 <= float(self.alpha) <= 1.0:
                raise UsageError(f"blend weight must lie in [0, 1], got {self.alpha}")

    @classmethod
    def parse(cls, text: str) -> "RankingPolicy":
        """statusquo | status_quo | personalized | random | blend:ALPHA"""
        text = text.strip().lower()
        if text in ("statusquo", STATUS_QUO):
            return cls(STATUS_QUO)
        if text in (PERSONALIZED, RANDOM):
            return cls(text)
        if text.startswith("blend:"):
            raw = text.split(":", 1)[1]
            try:
                alpha = float(raw)
            except ValueError:
                raise UsageError(f"malformed blend weight '{raw}'") from None
            return cls(BLEND, alpha)
        raise UsageError(f"unknown policy '{text}'")

    @property
    def needs_utilities(self) -> bool:
        return self.variant in (PERSONALIZED, BLEND)

    def label(self) -> str:
        return f"blend:{self.alpha:g}" if self.variant == BLEND else self.variant


def _ranks_from_order(order: IntArray, search_idx: IntArray, search_start: IntArray) -> IntArray:
    """Within-search rank (1 = top) of each row, given a global row order."""
    ranks = np.empty(order.size, dtype=np.int64)
    ranks[order] = np.arange(order.size) - search_start[search_idx[order]] + 1
    return ranks


def preference_ranks(table, utilities: FloatArray) -> IntArray:
    """Rank by utility, highest first; ties by room id."""
    u = np.asarray(utilities, dtype=np.float64)
    if u.shape != (table.n_rows,) or not np.all(np.isfinite(u)):
        raise UsageError("personalized ranking needs a finite utility for every slot")
    order = np.lexsort((table.room_codes(), -u, table.search_idx))
    return _ranks_from_order(order, table.search_idx, table.search_start)


def random_ranks(table, seed: int) -> IntArray:
    """Uniform permutation per search, keyed by (seed, search id, slot)."""
    keys = np.array([hash_search(s) for s in table.search_ids], dtype=np.uint64)
    slot = (np.arange(table.n_rows) - table.search_start[table.search_idx]).astype(np.uint64)
    draws = keyed_uniform(seed, "random-order", keys[table.search_idx], slot)
    order = np.lexsort((draws, table.search_idx))
    return _ranks_from_order(order, table.search_idx, table.search_start)


def hash_search(search_id: str) -> int:
    return stream_key(str(search_id))


def blend_order(pref_ranks, random_ranks, alpha: float) -> IntArray:
    """New positions for one search from alpha * pref + (1 - alpha) * random.

    Ascending score; ties go to the better random rank.
    """
    if not 0.0 <= alpha <= 1.0:
        raise UsageError(f"blend weight must lie in [0, 1], got {alpha}")
    pref = np.asarray(pref_ranks, dtype=np.float64)
    rand = np.asarray(random_ranks, dtype=np.float64)
    order = np.lexsort((rand, alpha * pref + (1.0 - alpha) * rand))
    positions = np.empty(order.size, dtype=np.int64)
    positions[order] = np.arange(1, order.size + 1)
    return positions


def blend_ranks(table, pref: IntArray, rand: IntArray, alpha: float) -> IntArray:
    if not 0.0 <= alpha <= 1.0:
        raise UsageError(f"blend weight must lie in [0, 1], got {alpha}")
    score = alpha * pref.astype(np.float64) + (1.0 - alpha) * rand.astype(np.float64)
    order = np.lexsort((rand, score, table.search_idx))
    return _ranks_from_order(order, table.search_idx, table.search_start)


def rerank(table, policy: RankingPolicy, utilities: Optional[FloatArray] = None, seed: int = 0) -> IntArray:
    """New display position for every slot under `policy`."""
    if policy.variant == STATUS_QUO:
        return table.position.copy()
    if policy.needs_utilities and utilities is None:
        raise UsageError(f"policy '{policy.label()}' needs slot utilities")
    if policy.variant == PERSONALIZED:
        return preference_ranks(table, utilities)
    rand = random_ranks(table, seed)
    if policy.variant == RANDOM:
        return rand
    return blend_ranks(table, preference_ranks(table, utilities), rand, float(policy.alpha))
