"""Core data model: users, rooms, searches and observed choices.

All types are frozen; a `Dataset` can be shared by any number of readers.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..src._typing import FloatArray

AMENITIES: Tuple[str, ...] = (
    "ac", "balcony", "dishwasher", "doorman", "elevator",
    "exterior_view", "heating", "smoker_friendly", "tv", "terrace",
)

# The last district is the omitted baseline.
DISTRICTS: Tuple[str, ...] = (
    "sarria_gracia", "ciutat_vella_sant_marti", "eixample",
    "north", "sants_les_corts", "greater_barcelona",
)
BASELINE_DISTRICT = DISTRICTS[-1]
DISTRICT_DUMMIES: Tuple[str, ...] = tuple(d for d in DISTRICTS if d != BASELINE_DISTRICT)

MATCH_NAMES: Tuple[str, ...] = ("gender_match", "age_match", "occupation_match")

X1_NAMES: Tuple[str, ...] = ("price", "missing_n_tenants", "n_tenants") + DISTRICT_DUMMIES
X2_NAMES: Tuple[str, ...] = ("days_since_published",) + MATCH_NAMES + AMENITIES
Z_NAMES: Tuple[str, ...] = ("age", "female", "student", "worker")

# request-utility blocks: beta1 over x1, beta2 over the non-interacted part of
# x2, beta_xz over the landlord-preference match dummies.
BETA2_NAMES: Tuple[str, ...] = ("days_since_published",) + AMENITIES
BETA_XZ_NAMES: Tuple[str, ...] = MATCH_NAMES
REQUEST_NAMES: Tuple[str, ...] = X1_NAMES + BETA2_NAMES + BETA_XZ_NAMES

# click propensity: g(pos) = [pos, pos^2, 1(pos=1), 1(pos=2), 1(pos=3)], then U and pos*U
POSITION_NAMES: Tuple[str, ...] = ("position", "position_sq", "pos1", "pos2", "pos3")
CLICK_NAMES: Tuple[str, ...] = POSITION_NAMES + ("utility", "position_x_utility")

GENDERS = ("female", "male")
OCCUPATIONS = ("no_students", "students_only")

MIN_AGE, MAX_AGE = 16, 99


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    age: int
    female: bool
    student: bool
    worker: bool

    def z(self) -> FloatArray:
        return np.array([self.age, self.female, self.student, self.worker], dtype=np.float64)


@dataclass(frozen=True)
class Listing:
    room_id: str
    price: float
    n_tenants: Optional[int]
    first_published: dt.date
    registered_landlord: bool
    amenities: Tuple[bool, ...]     # aligned with AMENITIES
    district: str
    pref_min_age: Optional[int] = None
    pref_max_age: Optional[int] = None
    pref_gender: Optional[str] = None
    pref_occupation: Optional[str] = None

    def has(self, amenity: str) -> bool:
        return self.amenities[AMENITIES.index(amenity)]

    def amenity_map(self) -> Dict[str, bool]:
        return dict(zip(AMENITIES, self.amenities))


@dataclass(frozen=True)
class SearchResultSlot:
    room_id: str
    position: int
    clicked: bool = False
    requested: bool = False


@dataclass(frozen=True)
class SearchLog:
    search_id: str
    user_id: str
    timestamp: dt.datetime
    slots: Tuple[SearchResultSlot, ...]

    @property
    def n_slots(self) -> int:
        return len(self.slots)

    @property
    def n_clicked(self) -> int:
        return sum(s.clicked for s in self.slots)

    @property
    def n_requested(self) -> int:
        return sum(s.requested for s in self.slots)


@dataclass(frozen=True)
class DerivedCovariates:
    x1: FloatArray
    x2: FloatArray
    position: int

    def __post_init__(self):
        for arr in (self.x1, self.x2):
            arr.setflags(write=False)

    def as_dict(self) -> Dict[str, float]:
        out = dict(zip(X1_NAMES, self.x1.tolist()))
        out.update(zip(X2_NAMES, self.x2.tolist()))
        return out


@dataclass(frozen=True)
class DatasetMeta:
    page_capacity: int = 20
    winsor_caps: Mapping[str, float] = field(default_factory=dict)
    seed: Optional[int] = None
    true_params: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    extra: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Dataset:
    users: Tuple[UserProfile, ...]
    listings: Tuple[Listing, ...]
    searches: Tuple[SearchLog, ...]
    meta: DatasetMeta = field(default_factory=DatasetMeta)

    def user_index(self) -> Dict[str, int]:
        return {u.user_id: i for i, u in enumerate(self.users)}

    def room_index(self) -> Dict[str, int]:
        return {r.room_id: i for i, r in enumerate(self.listings)}
