"""Deterministic choice prediction and room relabelling."""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from ..backend import generator
from ..src._typing import BoolArray, FloatArray, IntArray
from ..src.errors import UsageError, ValidationError
from ..src.logging_utils import get_logger, log
from .policy import _ranks_from_order

logger = get_logger(__name__)

GARBLE_UNIVERSES = ("listings", "appearing")


def predict_choices(
    table,
    click_index: FloatArray,
    utilities: FloatArray,
    n_clicks: Optional[IntArray] = None,
    n_requests: Optional[IntArray] = None,
) -> Tuple[BoolArray, BoolArray]:
    """Top-k slots by click index are clicked; the top-r of those by utility are requested.

    k and r default to the observed per-search counts. Click ties go to the
    higher utility, then the smaller room id; request ties to the smaller
    room id.
    """
    k = table.clicks_per_search() if n_clicks is None else np.asarray(n_clicks)
    r = table.requests_per_search() if n_requests is None else np.asarray(n_requests)
    if np.any(r > k):
        raise UsageError("request budget exceeds click budget in some search")
    index = np.asarray(click_index, dtype=np.float64)
    u = np.asarray(utilities, dtype=np.float64)
    codes = table.room_codes()
    sidx, start = table.search_idx, table.search_start

    click_rank = _ranks_from_order(np.lexsort((codes, -u, -index, sidx)), sidx, start)
    clicked = click_rank <= k[sidx]

    request_rank = _ranks_from_order(np.lexsort((codes, -u, ~clicked, sidx)), sidx, start)
    requested = clicked & (request_rank <= r[sidx])
    return clicked, requested


def room_universe(table, kind: str = "listings") -> IntArray:
    if kind == "listings":
        return np.arange(table.room_ids.size, dtype=np.int64)
    if kind == "appearing":
        return np.unique(table.room_idx)
    raise UsageError(f"unknown garbling universe '{kind}'; choose from {GARBLE_UNIVERSES}")


def garble_rooms(table, universe: IntArray, seed: int):
    """Replace each search's room ids by distinct ids drawn from `universe`.

    Draws are keyed by (seed, search id). Positions, covariates and choice
    flags are untouched; only room identity changes.
    """
    universe = np.asarray(universe, dtype=np.int64)
    sizes = table.n_slots
    if sizes.size and universe.size < sizes.max():
        raise ValidationError(
            f"garbling universe of {universe.size} rooms is smaller than a search of {int(sizes.max())}"
        )
    new_idx = np.empty(table.n_rows, dtype=np.int64)
    for s, sid in enumerate(table.search_ids):
        lo, hi = table.search_start[s], table.search_start[s + 1]
        new_idx[lo:hi] = generator(seed, "garble", str(sid)).choice(universe, size=hi - lo, replace=False)
    log(logger, 10, "rooms_garbled", searches=table.n_searches, universe=universe.size)
    return table.with_rooms(new_idx)
