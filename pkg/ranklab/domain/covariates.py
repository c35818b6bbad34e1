"""Derived covariates: the (x1, x2, position) triple every model consumes.

Landlord-preference match dummies follow the rule that a landlord who states
no preference matches every user.
"""

from __future__ import annotations

import datetime as dt
from typing import Optional

import numpy as np

from ..src.errors import InconsistentTimestampError
from .types import (
    DISTRICT_DUMMIES, DerivedCovariates, Listing, UserProfile,
)


def gender_match(listing: Listing, user: UserProfile) -> bool:
    if listing.pref_gender is None:
        return True
    return user.female if listing.pref_gender == "female" else not user.female


def age_match(listing: Listing, user: UserProfile) -> bool:
    if listing.pref_min_age is not None and user.age < listing.pref_min_age:
        return False
    if listing.pref_max_age is not None and user.age > listing.pref_max_age:
        return False
    return True


def occupation_match(listing: Listing, user: UserProfile) -> bool:
    if listing.pref_occupation is None:
        return True
    if listing.pref_occupation == "no_students":
        return not user.student
    return user.student


def days_since_published(listing: Listing, timestamp: dt.datetime) -> int:
    days = (timestamp.date() - listing.first_published).days
    if days < 0:
        raise InconsistentTimestampError(
            f"room {listing.room_id} first published {listing.first_published} "
            f"after search at {timestamp.isoformat()}"
        )
    return days


def derive_covariates(
    user: UserProfile,
    listing: Listing,
    search_timestamp: dt.datetime,
    position: int,
    winsor_cap: Optional[float] = None,
) -> DerivedCovariates:
    days = float(days_since_published(listing, search_timestamp))
    if winsor_cap is not None:
        days = min(days, float(winsor_cap))

    missing = listing.n_tenants is None
    districts = [float(listing.district == d) for d in DISTRICT_DUMMIES]
    x1 = np.array(
        [listing.price, float(missing), 0.0 if missing else float(listing.n_tenants)] + districts,
        dtype=np.float64,
    )
    x2 = np.array(
        [
            days,
            float(gender_match(listing, user)),
            float(age_match(listing, user)),
            float(occupation_match(listing, user)),
        ]
        + [float(a) for a in listing.amenities],
        dtype=np.float64,
    )
    return DerivedCovariates(x1=x1, x2=x2, position=int(position))


def position_features(position) -> np.ndarray:
    """g(pos) rows: [pos, pos^2, 1(pos=1), 1(pos=2), 1(pos=3)]."""
    pos = np.asarray(position, dtype=np.float64)
    return np.stack([pos, pos * pos, pos == 1, pos == 2, pos == 3], axis=-1).astype(np.float64)
