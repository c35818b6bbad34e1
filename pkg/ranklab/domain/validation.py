"""Structural checks on a dataset, and the estimation-sample restriction."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence

from ..src.logging_utils import get_logger, log
from .types import (
    DISTRICTS, GENDERS, MAX_AGE, MIN_AGE, OCCUPATIONS, AMENITIES, Dataset,
    Listing, SearchLog, UserProfile,
)

logger = get_logger(__name__)

DANGLING_USER = "dangling user reference"
DANGLING_ROOM = "dangling room reference"
DUPLICATE_USER = "duplicate user id"
DUPLICATE_ROOM = "duplicate room id"
DUPLICATE_SEARCH = "duplicate search id"
DUPLICATE_POSITION = "duplicate position"
POSITION_GAP = "positions not 1..n"
REQUEST_WITHOUT_CLICK = "request without click"
AGE_BOUNDS = "age out of bounds"
PREF_AGE_ORDER = "preferred min age above max age"
BAD_CATEGORY = "unknown category"
NEGATIVE_PRICE = "negative price"
NEGATIVE_TENANTS = "negative number of tenants"
EMPTY_SEARCH = "empty search"
PAGE_CAPACITY = "search exceeds page capacity"
PUBLISHED_AFTER_SEARCH = "room published after search"


@dataclass(frozen=True)
class Violation:
    kind: str
    entity: str
    detail: str = ""

    def __str__(self) -> str:
        tail = f": {self.detail}" if self.detail else ""
        return f"{self.kind} [{self.entity}]{tail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def valid(self) -> bool:
        return not self.violations

    def count_by_kind(self) -> Dict[str, int]:
        return dict(Counter(v.kind for v in self.violations))

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def lines(self) -> List[str]:
        return [str(v) for v in self.violations]


def _duplicates(ids: Sequence[str]) -> List[str]:
    return sorted(k for k, n in Counter(ids).items() if n > 1)


def _check_listing(room: Listing, out: List[Violation]) -> None:
    rid = room.room_id
    if room.price < 0:
        out.append(Violation(NEGATIVE_PRICE, rid, str(room.price)))
    if room.n_tenants is not None and room.n_tenants < 0:
        out.append(Violation(NEGATIVE_TENANTS, rid, str(room.n_tenants)))
    if room.district not in DISTRICTS:
        out.append(Violation(BAD_CATEGORY, rid, f"district={room.district}"))
    if len(room.amenities) != len(AMENITIES):
        out.append(Violation(BAD_CATEGORY, rid, f"{len(room.amenities)} amenity flags"))
    if room.pref_gender is not None and room.pref_gender not in GENDERS:
        out.append(Violation(BAD_CATEGORY, rid, f"pref_gender={room.pref_gender}"))
    if room.pref_occupation is not None and room.pref_occupation not in OCCUPATIONS:
        out.append(Violation(BAD_CATEGORY, rid, f"pref_occupation={room.pref_occupation}"))
    if (room.pref_min_age is not None and room.pref_max_age is not None
            and room.pref_min_age > room.pref_max_age):
        out.append(Violation(PREF_AGE_ORDER, rid, f"{room.pref_min_age} > {room.pref_max_age}"))


def _check_search(
    search: SearchLog,
    users: Dict[str, UserProfile],
    rooms: Dict[str, Listing],
    page_capacity: int,
    out: List[Violation],
) -> None:
    sid = search.search_id
    if search.user_id not in users:
        out.append(Violation(DANGLING_USER, sid, search.user_id))
    n = len(search.slots)
    if n == 0:
        out.append(Violation(EMPTY_SEARCH, sid))
        return
    if n > page_capacity:
        out.append(Violation(PAGE_CAPACITY, sid, f"{n} > {page_capacity}"))

    positions = [slot.position for slot in search.slots]
    dup = sorted(p for p, c in Counter(positions).items() if c > 1)
    if dup:
        out.append(Violation(DUPLICATE_POSITION, sid, ",".join(map(str, dup))))
    elif sorted(positions) != list(range(1, n + 1)):
        out.append(Violation(POSITION_GAP, sid, ",".join(map(str, sorted(positions)))))

    for slot in search.slots:
        room = rooms.get(slot.room_id)
        if room is None:
            out.append(Violation(DANGLING_ROOM, sid, slot.room_id))
        elif room.first_published > search.timestamp.date():
            out.append(Violation(PUBLISHED_AFTER_SEARCH, sid, slot.room_id))
        if slot.requested and not slot.clicked:
            out.append(Violation(REQUEST_WITHOUT_CLICK, sid, f"position {slot.position}"))


def validate_dataset(
    users: Sequence[UserProfile],
    listings: Sequence[Listing],
    searches: Sequence[SearchLog],
    page_capacity: int = 20,
) -> ValidationReport:
    """Collect every structural violation; never raises on data content."""
    out: List[Violation] = []

    for uid in _duplicates([u.user_id for u in users]):
        out.append(Violation(DUPLICATE_USER, uid))
    for rid in _duplicates([r.room_id for r in listings]):
        out.append(Violation(DUPLICATE_ROOM, rid))
    for sid in _duplicates([s.search_id for s in searches]):
        out.append(Violation(DUPLICATE_SEARCH, sid))

    for u in users:
        if not MIN_AGE <= u.age <= MAX_AGE:
            out.append(Violation(AGE_BOUNDS, u.user_id, str(u.age)))
    for r in listings:
        _check_listing(r, out)

    user_map = {u.user_id: u for u in users}
    room_map = {r.room_id: r for r in listings}
    for s in searches:
        _check_search(s, user_map, room_map, page_capacity, out)

    report = ValidationReport(tuple(out))
    log(logger, 20, "dataset_validated", users=len(users), rooms=len(listings),
        searches=len(searches), violations=len(out))
    return report


def validate(dataset: Dataset) -> ValidationReport:
    return validate_dataset(dataset.users, dataset.listings, dataset.searches,
                            page_capacity=dataset.meta.page_capacity)


def restrict_sample(dataset: Dataset, min_requests: int = 1) -> Dataset:
    """Keep users with at least `min_requests` requests, and their searches.

    Listings are left untouched so room-level metrics keep their universe.
    """
    if min_requests <= 0:
        return dataset
    totals: Counter = Counter()
    for s in dataset.searches:
        totals[s.user_id] += s.n_requested
    keep = {uid for uid, n in totals.items() if n >= min_requests}
    users = tuple(u for u in dataset.users if u.user_id in keep)
    searches = tuple(s for s in dataset.searches if s.user_id in keep)
    log(logger, 20, "sample_restricted", min_requests=min_requests,
        users_kept=len(users), users_dropped=len(dataset.users) - len(users),
        searches_kept=len(searches))
    return replace(dataset, users=users, searches=searches)
