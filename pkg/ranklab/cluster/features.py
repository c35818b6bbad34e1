"""Implicit search filters and per-user filter frequencies.

A search is filtered by a binary room characteristic when every one of its
results has it. Searches shorter than `min_search_size` share every
characteristic trivially and are not counted.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np
import pandas as pd

from ..domain.types import AMENITIES, DISTRICT_DUMMIES, MATCH_NAMES
from ..src.errors import UsageError
from ..src.logging_utils import get_logger, log

logger = get_logger(__name__)

FILTER_NAMES: Tuple[str, ...] = MATCH_NAMES + AMENITIES + DISTRICT_DUMMIES


def search_filters(table, min_search_size: int = 2) -> np.ndarray:
    """(n_searches, 18) boolean matrix; qualifying searches only can be true."""
    if min_search_size < 1:
        raise UsageError(f"minimum search size must be >= 1, got {min_search_size}")
    columns = np.column_stack([table.column(n) for n in FILTER_NAMES])
    if table.n_rows == 0:
        return np.zeros((table.n_searches, len(FILTER_NAMES)), dtype=bool)
    all_have = np.minimum.reduceat(columns, table.search_start[:-1], axis=0) >= 1.0
    qualifying = table.n_slots >= min_search_size
    return all_have & qualifying[:, None]


def filter_features(table, min_search_size: int = 2) -> pd.DataFrame:
    """Percentage of each searching user's qualifying searches filtered by each characteristic.

    Indexed by user_id in user order; users with no qualifying search get a
    zero row.
    """
    filtered = search_filters(table, min_search_size).astype(np.float64)
    qualifying = (table.n_slots >= min_search_size).astype(np.float64)
    n_users = table.user_ids.size

    hits = np.zeros((n_users, len(FILTER_NAMES)))
    np.add.at(hits, table.search_user, filtered)
    n_qual = np.bincount(table.search_user, weights=qualifying, minlength=n_users)
    searching = np.bincount(table.search_user, minlength=n_users) > 0

    with np.errstate(invalid="ignore", divide="ignore"):
        pct = np.where(n_qual[:, None] > 0, 100.0 * hits / n_qual[:, None], 0.0)

    empty = searching & (n_qual == 0)
    if empty.any():
        log(logger, 30, "users_without_qualifying_searches", users=int(empty.sum()),
            min_search_size=min_search_size)
    return pd.DataFrame(pct[searching], index=pd.Index(table.user_ids[searching], name="user_id"),
                        columns=list(FILTER_NAMES))
