"""The platform's status-quo ranking.

Rooms are ordered by landlord registration, then by how recently they were
published (coarse tiers), and ties are broken by one uniform draw per room
that every user sees in the same epoch.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..backend import keyed_uniform
from ..domain.types import Listing
from ..src._typing import FloatArray, IntArray


@dataclass(frozen=True)
class StatusQuoTiebreak:
    """Per-room uniform draws in [0, 1), shared by all users of an epoch."""

    seed: int
    n_epochs: int = 1
    start_date: dt.date = dt.date(2018, 1, 1)
    span_days: int = 60

    def epoch_of(self, when: dt.datetime | dt.date) -> int:
        day = when.date() if isinstance(when, dt.datetime) else when
        offset = (day - self.start_date).days
        if self.n_epochs <= 1:
            return 0
        return int(np.clip(offset * self.n_epochs // max(self.span_days, 1), 0, self.n_epochs - 1))

    def draws(self, room_index: IntArray, epoch: int) -> FloatArray:
        room_index = np.asarray(room_index, dtype=np.uint64)
        return keyed_uniform(self.seed, "tiebreak", int(epoch), room_index)


def recency_tier(days_since_published: np.ndarray, tier_days: Sequence[int] = (7, 30)) -> IntArray:
    """Larger tier = more recent. With (7, 30): <=7 days -> 2, 8-30 -> 1, >30 -> 0."""
    bounds = np.asarray(tier_days, dtype=np.float64)
    days = np.asarray(days_since_published, dtype=np.float64)
    return (bounds.size - np.searchsorted(bounds, days, side="left")).astype(np.int64)


def status_quo_order(
    registered: np.ndarray,
    days_since_published: np.ndarray,
    tiebreak: np.ndarray,
    tier_days: Sequence[int] = (7, 30),
) -> IntArray:
    """Indices of the candidates in display order."""
    tier = recency_tier(days_since_published, tier_days)
    # lexsort: last key is primary
    return np.lexsort((np.asarray(tiebreak), -tier, -np.asarray(registered, dtype=np.int64)))


def status_quo_rank(
    candidate_rooms: Sequence[str],
    listings: Sequence[Listing],
    tiebreak_epoch: int,
    tiebreak: StatusQuoTiebreak,
    as_of: dt.date,
    tier_days: Sequence[int] = (7, 30),
) -> Tuple[str, ...]:
    """Order `candidate_rooms` (room ids) the way the platform would on `as_of`."""
    index = {r.room_id: i for i, r in enumerate(listings)}
    idx = np.array([index[c] for c in candidate_rooms], dtype=np.int64)
    registered = np.array([listings[i].registered_landlord for i in idx], dtype=bool)
    days = np.array([(as_of - listings[i].first_published).days for i in idx], dtype=np.float64)
    order = status_quo_order(registered, days, tiebreak.draws(idx, tiebreak_epoch), tier_days)
    return tuple(candidate_rooms[i] for i in order)
