"""Columnar view of a dataset: one row per search-result slot.

Rows are grouped by search (searches in dataset order) and sorted by
position inside each search. Covariates are derived with the same rules as
`derive_covariates`, vectorised over all rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from ..src._typing import BoolArray, FloatArray, IntArray
from ..src.errors import InconsistentTimestampError, ValidationError
from ..src.logging_utils import get_logger, log
from .types import (
    AMENITIES, BETA2_NAMES, BETA_XZ_NAMES, DISTRICT_DUMMIES, Dataset,
    REQUEST_NAMES, X1_NAMES, X2_NAMES,
)

logger = get_logger(__name__)

_GENDER_CODE = {None: 0, "female": 1, "male": 2}
_OCCUPATION_CODE = {None: 0, "no_students": 1, "students_only": 2}
_REQUEST_COLUMNS = [X1_NAMES.index(n) if n in X1_NAMES else len(X1_NAMES) + X2_NAMES.index(n)
                    for n in REQUEST_NAMES]


@dataclass(frozen=True)
class SlotTable:
    # per search
    search_ids: np.ndarray          # (S,) str
    search_user: IntArray           # (S,)
    search_start: IntArray          # (S + 1,) row offsets
    search_day: IntArray            # (S,) proleptic ordinal of search date
    search_time: np.ndarray         # (S,) datetime of the search

    # per row
    search_idx: IntArray
    user_idx: IntArray
    room_idx: IntArray
    position: IntArray
    clicked: BoolArray
    requested: BoolArray
    x1: FloatArray                  # (R, len(X1_NAMES))
    x2: FloatArray                  # (R, len(X2_NAMES))
    z: FloatArray                   # (R, 4)

    # lookups
    user_ids: np.ndarray
    room_ids: np.ndarray
    registered: BoolArray           # per room
    winsor_cap: Optional[float] = None
    extra: Dict[str, object] = field(default_factory=dict, compare=False)

    # ------------------------------------------------------------------
    @property
    def n_rows(self) -> int:
        return int(self.position.size)

    @property
    def n_searches(self) -> int:
        return int(self.search_ids.size)

    @property
    def n_slots(self) -> IntArray:
        return np.diff(self.search_start)

    @property
    def price(self) -> FloatArray:
        return self.x1[:, 0]

    def room_codes(self) -> IntArray:
        """Per-row integer that orders rows like their room_id strings."""
        order = np.argsort(self.room_ids, kind="stable")
        rank = np.empty(order.size, dtype=np.int64)
        rank[order] = np.arange(order.size)
        return rank[self.room_idx]

    def column(self, name: str) -> FloatArray:
        if name in X1_NAMES:
            return self.x1[:, X1_NAMES.index(name)]
        return self.x2[:, X2_NAMES.index(name)]

    def request_design(self) -> FloatArray:
        """Rows laid out as REQUEST_NAMES (beta1 | beta2 | beta_xz)."""
        return np.concatenate([self.x1, self.x2], axis=1)[:, _REQUEST_COLUMNS]

    def per_search(self, values: np.ndarray, how: str = "sum") -> np.ndarray:
        starts = self.search_start[:-1]
        if self.n_rows == 0:
            return np.zeros(self.n_searches)
        if how == "sum":
            return np.add.reduceat(values, starts)
        if how == "min":
            return np.minimum.reduceat(values, starts)
        if how == "max":
            return np.maximum.reduceat(values, starts)
        raise ValueError(f"unknown reduction '{how}'")

    def clicks_per_search(self) -> IntArray:
        return self.per_search(self.clicked.astype(np.int64))

    def requests_per_search(self) -> IntArray:
        return self.per_search(self.requested.astype(np.int64))

    def select_searches(self, mask: BoolArray) -> "SlotTable":
        """Table restricted to the searches where `mask` is true."""
        mask = np.asarray(mask, dtype=bool)
        rows = mask[self.search_idx]
        kept = np.flatnonzero(mask)
        remap = np.full(self.n_searches, -1, dtype=np.int64)
        remap[kept] = np.arange(kept.size)
        counts = self.n_slots[kept]
        start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        return replace(
            self,
            search_ids=self.search_ids[kept],
            search_user=self.search_user[kept],
            search_start=start,
            search_day=self.search_day[kept],
            search_time=self.search_time[kept],
            search_idx=remap[self.search_idx[rows]],
            user_idx=self.user_idx[rows],
            room_idx=self.room_idx[rows],
            position=self.position[rows],
            clicked=self.clicked[rows],
            requested=self.requested[rows],
            x1=self.x1[rows],
            x2=self.x2[rows],
            z=self.z[rows],
        )

    def with_rooms(self, room_idx: IntArray, room_ids: Optional[np.ndarray] = None) -> "SlotTable":
        """Same slots with relabelled room identities (covariates untouched)."""
        return replace(
            self,
            room_idx=np.asarray(room_idx, dtype=np.int64),
            room_ids=self.room_ids if room_ids is None else room_ids,
        )

    def with_choices(self, position: IntArray, clicked: BoolArray, requested: BoolArray) -> "SlotTable":
        return replace(self, position=position, clicked=clicked, requested=requested)

    # ------------------------------------------------------------------
    @classmethod
    def from_dataset(
        cls,
        dataset: Dataset,
        winsor_cap: Optional[float] = None,
        winsor_percentile: Optional[float] = 99.0,
    ) -> "SlotTable":
        """Build the table; the winsor cap comes from the argument, then the
        dataset metadata, then the configured percentile of raw days."""
        users, listings, searches = dataset.users, dataset.listings, dataset.searches
        uidx, ridx = dataset.user_index(), dataset.room_index()

        age = np.array([u.age for u in users], dtype=np.float64)
        female = np.array([u.female for u in users], dtype=bool)
        student = np.array([u.student for u in users], dtype=bool)
        worker = np.array([u.worker for u in users], dtype=bool)

        price = np.array([r.price for r in listings], dtype=np.float64)
        missing = np.array([r.n_tenants is None for r in listings], dtype=bool)
        tenants = np.array([0 if r.n_tenants is None else r.n_tenants for r in listings], dtype=np.float64)
        districts = np.array([[r.district == d for d in DISTRICT_DUMMIES] for r in listings],
                             dtype=np.float64).reshape(len(listings), len(DISTRICT_DUMMIES))
        amen = np.array([r.amenities for r in listings], dtype=np.float64).reshape(len(listings), len(AMENITIES))
        published = np.array([r.first_published.toordinal() for r in listings], dtype=np.int64)
        pmin = np.array([np.nan if r.pref_min_age is None else r.pref_min_age for r in listings], dtype=np.float64)
        pmax = np.array([np.nan if r.pref_max_age is None else r.pref_max_age for r in listings], dtype=np.float64)
        pgender = np.array([_GENDER_CODE[r.pref_gender] for r in listings], dtype=np.int8)
        poccup = np.array([_OCCUPATION_CODE[r.pref_occupation] for r in listings], dtype=np.int8)
        registered = np.array([r.registered_landlord for r in listings], dtype=bool)

        n_rows = sum(len(s.slots) for s in searches)
        search_idx = np.empty(n_rows, dtype=np.int64)
        room_idx = np.empty(n_rows, dtype=np.int64)
        position = np.empty(n_rows, dtype=np.int64)
        clicked = np.empty(n_rows, dtype=bool)
        requested = np.empty(n_rows, dtype=bool)
        search_user = np.empty(len(searches), dtype=np.int64)
        search_day = np.empty(len(searches), dtype=np.int64)
        start = np.zeros(len(searches) + 1, dtype=np.int64)

        try:
            row = 0
            for si, s in enumerate(searches):
                search_user[si] = uidx[s.user_id]
                search_day[si] = s.timestamp.date().toordinal()
                for slot in sorted(s.slots, key=lambda x: x.position):
                    search_idx[row] = si
                    room_idx[row] = ridx[slot.room_id]
                    position[row] = slot.position
                    clicked[row] = slot.clicked
                    requested[row] = slot.requested
                    row += 1
                start[si + 1] = row
        except KeyError as err:
            raise ValidationError(f"dangling reference {err} in search logs; run validate first") from err

        user_idx = search_user[search_idx]
        days = (search_day[search_idx] - published[room_idx]).astype(np.float64)
        if np.any(days < 0):
            bad = int(np.flatnonzero(days < 0)[0])
            raise InconsistentTimestampError(
                f"search {searches[search_idx[bad]].search_id} predates publication of "
                f"room {listings[room_idx[bad]].room_id}"
            )

        if winsor_cap is None:
            winsor_cap = dataset.meta.winsor_caps.get("days_since_published")
        if winsor_cap is None and winsor_percentile is not None and n_rows:
            winsor_cap = float(np.percentile(days, winsor_percentile))
        if winsor_cap is not None:
            days = np.minimum(days, winsor_cap)

        a, r = age[user_idx], room_idx
        g_match = np.where(pgender[r] == 0, True,
                           np.where(pgender[r] == 1, female[user_idx], ~female[user_idx]))
        lo_ok = np.isnan(pmin[r]) | (a >= np.nan_to_num(pmin[r], nan=0.0))
        hi_ok = np.isnan(pmax[r]) | (a <= np.nan_to_num(pmax[r], nan=0.0))
        o_match = np.where(poccup[r] == 0, True,
                           np.where(poccup[r] == 1, ~student[user_idx], student[user_idx]))

        x1 = np.column_stack([price[r], missing[r], tenants[r], districts[r]]).astype(np.float64)
        x2 = np.column_stack([days, g_match, lo_ok & hi_ok, o_match, amen[r]]).astype(np.float64)
        z = np.column_stack([age, female, student, worker]).astype(np.float64)[user_idx]

        table = cls(
            search_ids=np.array([s.search_id for s in searches], dtype=object),
            search_user=search_user,
            search_start=start,
            search_day=search_day,
            search_time=np.array([s.timestamp for s in searches], dtype=object),
            search_idx=search_idx,
            user_idx=user_idx,
            room_idx=room_idx,
            position=position,
            clicked=clicked,
            requested=requested,
            x1=x1.reshape(n_rows, len(X1_NAMES)),
            x2=x2.reshape(n_rows, len(X2_NAMES)),
            z=z.reshape(n_rows, 4),
            user_ids=np.array([u.user_id for u in users], dtype=object),
            room_ids=np.array([r.room_id for r in listings], dtype=object),
            registered=registered,
            winsor_cap=winsor_cap,
        )
        log(logger, 10, "slot_table_built", searches=table.n_searches, rows=table.n_rows,
            winsor_cap=winsor_cap)
        return table


__all__ = ["SlotTable", "BETA2_NAMES", "BETA_XZ_NAMES"]
