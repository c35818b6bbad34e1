"""Synthetic users and rooms.

Covariates are drawn independently of each other (price may shift by
district), so the true mean of every hidden covariate given the visible ones
is its unconditional mean.
"""

from __future__ import annotations

import datetime as dt
from typing import Tuple

import numpy as np

from ..backend import generator
from ..data.config import MarketConfig, validate_market_config
from ..domain.types import (
    AMENITIES, DISTRICTS, MAX_AGE, MIN_AGE, Listing, UserProfile,
)
from ..src.logging_utils import get_logger, log

logger = get_logger(__name__)


def user_id(i: int) -> str:
    return f"u{i:06d}"


def room_id(i: int) -> str:
    return f"r{i:06d}"


def generate_users(config: MarketConfig) -> Tuple[UserProfile, ...]:
    rng = generator(config.seed, "users")
    n = config.n_users
    age = np.clip(np.rint(rng.normal(config.age_mean, config.age_sd, n)), MIN_AGE, MAX_AGE).astype(int)
    female = rng.random(n) < config.female_share
    student = rng.random(n) < config.student_share
    worker = rng.random(n) < config.worker_share
    return tuple(
        UserProfile(user_id(i), int(age[i]), bool(female[i]), bool(student[i]), bool(worker[i]))
        for i in range(n)
    )


def _categorical(rng: np.random.Generator, n: int, shares) -> np.ndarray:
    """0 = none, 1.. = option index + 1."""
    u = rng.random(n)
    edges = np.cumsum(shares)
    return np.where(u < edges[-1], np.searchsorted(edges, u, side="right") + 1, 0)


def generate_listings(config: MarketConfig) -> Tuple[Listing, ...]:
    rng = generator(config.seed, "rooms")
    n = config.n_rooms

    weights = np.array([config.district.get(d, 0.0) for d in DISTRICTS], dtype=np.float64)
    district = rng.choice(len(DISTRICTS), size=n, p=weights / weights.sum())
    shift = np.array([config.price_district_shift.get(d, 0.0) for d in DISTRICTS])[district]
    price = np.round(np.maximum(rng.normal(config.price_mean, config.price_sd, n) + shift, 0.0), 2)

    missing = rng.random(n) < config.missing_tenants_share
    tenants = rng.poisson(config.tenants_mean, n)
    age_days = 1 + np.floor(rng.exponential(config.days_published_mean, n)).astype(int)
    registered = rng.random(n) < config.registered_share
    freq = np.array([config.amenity.get(a, 0.0) for a in AMENITIES])
    amen = rng.random((n, len(AMENITIES))) < freq

    has_age = rng.random(n) < config.pref_age_share
    min_age = rng.integers(config.pref_min_age_low, config.pref_min_age_high + 1, n)
    width = rng.integers(config.pref_age_width_low, config.pref_age_width_high + 1, n)
    gender = _categorical(rng, n, [config.pref_female_share, config.pref_male_share])
    occupation = _categorical(rng, n, [config.pref_no_students_share, config.pref_students_only_share])

    genders = (None, "female", "male")
    occupations = (None, "no_students", "students_only")
    rooms = []
    for i in range(n):
        rooms.append(Listing(
            room_id=room_id(i),
            price=float(price[i]),
            n_tenants=None if missing[i] else int(tenants[i]),
            first_published=config.start_date - dt.timedelta(days=int(age_days[i])),
            registered_landlord=bool(registered[i]),
            amenities=tuple(bool(x) for x in amen[i]),
            district=DISTRICTS[district[i]],
            pref_min_age=int(min_age[i]) if has_age[i] else None,
            pref_max_age=int(min_age[i] + width[i]) if has_age[i] else None,
            pref_gender=genders[gender[i]],
            pref_occupation=occupations[occupation[i]],
        ))
    return tuple(rooms)


def generate_market(config: MarketConfig) -> Tuple[Tuple[UserProfile, ...], Tuple[Listing, ...]]:
    validate_market_config(config)
    users = generate_users(config)
    listings = generate_listings(config)
    log(logger, 20, "market_generated", users=len(users), rooms=len(listings), seed=config.seed)
    return users, listings
