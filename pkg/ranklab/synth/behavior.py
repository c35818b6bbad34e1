"""Search sessions and click/request behaviour under the status-quo ranking.

Each slot gets a click index

    I = g(pos) b_pos + E[U] b_U + pos * E[U] b_posU + e_click

where E[U] replaces the hidden covariates by their true means, and is clicked
when I clears a threshold set at the (1 - click_rate) quantile of all
indices. Among clicked slots, a request is sent when U + e_request clears the
(1 - request_rate) quantile. All shocks are standard Gumbel draws keyed by
(seed, stage, search, position).
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..backend import generator, keyed_gumbel, parallel_map
from ..data.config import MarketConfig, validate_market_config
from ..domain.covariates import position_features
from ..domain.table import SlotTable
from ..domain.types import (
    AMENITIES, CLICK_NAMES, POSITION_NAMES, REQUEST_NAMES,
    Dataset, DatasetMeta, Listing, SearchLog, SearchResultSlot, UserProfile,
)
from ..src._typing import FloatArray
from ..src.logging_utils import get_logger, log
from .market import generate_market
from .ranking import StatusQuoTiebreak, status_quo_order

logger = get_logger(__name__)

_GENDER = {None: 0, "female": 1, "male": 2}
_OCCUPATION = {None: 0, "no_students": 1, "students_only": 2}


@dataclass(frozen=True)
class SimulatedLogs:
    searches: Tuple[SearchLog, ...]
    winsor_cap: float
    click_threshold: float
    request_threshold: float


def search_id(user: int, k: int) -> str:
    return f"s{user:06d}-{k:04d}"


def coefficient_vector(values, names: Sequence[str]) -> FloatArray:
    return np.array([float(values.get(n, 0.0)) for n in names], dtype=np.float64)


def _user_searches(
    i: int,
    config: MarketConfig,
    registered: np.ndarray,
    published: np.ndarray,
    popularity: np.ndarray | None,
    tiebreak: StatusQuoTiebreak,
) -> List[Tuple[dt.datetime, np.ndarray]]:
    rng = generator(config.seed, "searches", i)
    n_rooms = registered.size
    n_searches = 1 + rng.poisson(max(config.searches_per_user_mean - 1.0, 0.0))
    start = dt.datetime.combine(config.start_date, dt.time())
    offsets = np.sort(np.floor(rng.uniform(0.0, config.span_days * 86400.0, n_searches)))
    sizes = np.clip(1 + rng.poisson(max(config.results_per_search_mean - 1.0, 0.0), n_searches),
                    1, min(config.page_capacity, n_rooms))

    out = []
    for offset, size in zip(offsets, sizes):
        when = start + dt.timedelta(seconds=float(offset))
        cand = rng.choice(n_rooms, size=int(size), replace=False, p=popularity)
        days = when.date().toordinal() - published[cand]
        draws = tiebreak.draws(cand, tiebreak.epoch_of(when))
        order = status_quo_order(registered[cand], days, draws, config.recency_tier_days)
        out.append((when, cand[order]))
    return out


def expected_request_utility(
    table: SlotTable,
    listings: Sequence[Listing],
    beta: FloatArray,
) -> FloatArray:
    """E[U | x1, pos] under the generator: hidden covariates at their true means.

    Days since publication averages over the room population at the search
    date; match dummies are the share of rooms a user matches.
    """
    published = np.array([r.first_published.toordinal() for r in listings], dtype=np.float64)
    pmin = np.array([np.nan if r.pref_min_age is None else r.pref_min_age for r in listings])
    pmax = np.array([np.nan if r.pref_max_age is None else r.pref_max_age for r in listings])
    pgender = np.array([_GENDER[r.pref_gender] for r in listings])
    poccup = np.array([_OCCUPATION[r.pref_occupation] for r in listings])
    amen = np.array([r.amenities for r in listings], dtype=np.float64).reshape(len(listings), len(AMENITIES))

    cap = np.inf if table.winsor_cap is None else table.winsor_cap
    days, inverse = np.unique(table.search_day, return_inverse=True)
    mean_days = np.array([np.minimum(d - published, cap).mean() for d in days])[inverse]

    ages, age_inv = np.unique(table.z[:, 0], return_inverse=True)
    no_age = np.isnan(pmin)
    age_share = np.array([
        np.mean(no_age | ((np.nan_to_num(pmin) <= a) & (a <= np.nan_to_num(pmax)))) for a in ages
    ])[age_inv]
    female = table.z[:, 1] > 0
    student = table.z[:, 2] > 0
    gender_share = np.where(female, np.mean(pgender != 2), np.mean(pgender != 1))
    occupation_share = np.where(student, np.mean(poccup != 1), np.mean(poccup != 2))

    design = table.request_design().copy()
    col = {n: j for j, n in enumerate(REQUEST_NAMES)}
    design[:, col["days_since_published"]] = mean_days[table.search_idx]
    design[:, col["gender_match"]] = gender_share
    design[:, col["age_match"]] = age_share
    design[:, col["occupation_match"]] = occupation_share
    for j, name in enumerate(AMENITIES):
        design[:, col[name]] = amen[:, j].mean()
    return design @ beta


def click_propensity(position, utility, beta_click: FloatArray) -> FloatArray:
    """Deterministic click index g(pos) b_pos + U b_U + pos U b_posU."""
    pos = np.asarray(position, dtype=np.float64)
    u = np.asarray(utility, dtype=np.float64)
    k = len(POSITION_NAMES)
    return position_features(pos) @ beta_click[:k] + u * beta_click[k] + pos * u * beta_click[k + 1]


def _threshold(values: FloatArray, rate: float) -> float:
    if values.size == 0:
        return np.inf
    if rate <= 0.0:
        return float(np.max(values))
    return float(np.quantile(values, 1.0 - rate))


def simulate_behavior(
    users: Sequence[UserProfile],
    listings: Sequence[Listing],
    config: MarketConfig,
    winsor_percentile: float = 99.0,
) -> SimulatedLogs:
    validate_market_config(config)
    registered = np.array([r.registered_landlord for r in listings], dtype=bool)
    published = np.array([r.first_published.toordinal() for r in listings], dtype=np.int64)
    popularity = None
    if config.popularity_skew > 0:
        w = np.arange(1, len(listings) + 1, dtype=np.float64) ** -config.popularity_skew
        popularity = w / w.sum()
    tiebreak = StatusQuoTiebreak(config.seed, config.tiebreak_epochs, config.start_date, config.span_days)

    per_user = parallel_map(
        lambda i: _user_searches(i, config, registered, published, popularity, tiebreak),
        range(len(users)),
    )

    shown: List[SearchLog] = []
    for i, sessions in enumerate(per_user):
        for k, (when, rooms) in enumerate(sessions):
            slots = tuple(SearchResultSlot(listings[r].room_id, p + 1) for p, r in enumerate(rooms))
            shown.append(SearchLog(search_id(i, k), users[i].user_id, when, slots))

    table = SlotTable.from_dataset(
        Dataset(tuple(users), tuple(listings), tuple(shown)),
        winsor_percentile=winsor_percentile,
    )
    beta_r = coefficient_vector(config.true_request, REQUEST_NAMES)
    beta_k = coefficient_vector(config.true_click, CLICK_NAMES)

    search_key = table.search_idx.astype(np.uint64)
    pos_key = table.position.astype(np.uint64)
    eu = expected_request_utility(table, listings, beta_r)
    index = click_propensity(table.position, eu, beta_k) + keyed_gumbel(config.seed, "click", search_key, pos_key)
    tau_k = _threshold(index, config.click_rate)
    clicked = index > tau_k

    utility = table.request_design() @ beta_r + keyed_gumbel(config.seed, "request", search_key, pos_key)
    tau_r = _threshold(utility[clicked], config.request_rate)
    requested = clicked & (utility > tau_r)

    searches = []
    for s, log_ in enumerate(shown):
        lo, hi = table.search_start[s], table.search_start[s + 1]
        slots = tuple(
            SearchResultSlot(slot.room_id, slot.position, bool(c), bool(q))
            for slot, c, q in zip(log_.slots, clicked[lo:hi], requested[lo:hi])
        )
        searches.append(SearchLog(log_.search_id, log_.user_id, log_.timestamp, slots))

    log(logger, 20, "behaviour_simulated", searches=len(searches), slots=table.n_rows,
        click_rate=float(clicked.mean()) if clicked.size else 0.0,
        request_given_click=float(requested.sum() / max(clicked.sum(), 1)),
        click_threshold=tau_k, request_threshold=tau_r)
    return SimulatedLogs(tuple(searches), float(table.winsor_cap or 0.0), tau_k, tau_r)


def generate_dataset(config: MarketConfig, winsor_percentile: float = 99.0) -> Dataset:
    """Market plus simulated logs, with the true parameters in the metadata."""
    users, listings = generate_market(config)
    logs = simulate_behavior(users, listings, config, winsor_percentile)
    meta = DatasetMeta(
        page_capacity=config.page_capacity,
        winsor_caps={"days_since_published": logs.winsor_cap},
        seed=config.seed,
        true_params={"request": dict(config.true_request), "click": dict(config.true_click)},
        extra={"click_threshold": logs.click_threshold, "request_threshold": logs.request_threshold},
    )
    return Dataset(users, listings, logs.searches, meta)
