"""Counterfactual logs: re-rank, predict choices, optionally relabel rooms."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Tuple

import numpy as np

from ..data.dataset_base import iter_jsonl, search_from_record, search_to_record, write_jsonl
from ..domain.types import SearchLog, SearchResultSlot
from ..src._typing import FloatArray, IntArray, ModelFit
from ..src.errors import DataIOError, UsageError, ValidationError
from ..src.logging_utils import get_logger, log
from .policy import RankingPolicy, rerank
from .predict import garble_rooms, predict_choices, room_universe

logger = get_logger(__name__)

CF_FILE = "searches_cf.jsonl"
EVENTS = ("shown", "clicked", "requested")


@dataclass(frozen=True)
class CounterfactualLog:
    """A SlotTable whose positions and choice flags are predictions.

    `utility` is the per-slot utility the prediction used and `euro_utility`
    the same in euros per month.
    """

    table: Any
    utility: FloatArray
    euro_utility: FloatArray
    policy: RankingPolicy
    seed: int
    garbled: bool = False
    utility_mode: str = "expected"

    @property
    def n_searches(self) -> int:
        return self.table.n_searches

    def provenance(self) -> Dict[str, Any]:
        return {
            "policy": self.policy.variant,
            "alpha": self.policy.alpha,
            "seed": int(self.seed),
            "garbled": bool(self.garbled),
            "utility": self.utility_mode,
            "blend_rule": "rank-convex, random-rank ties",
        }

    def _mask(self, event: str):
        if event == "shown":
            return np.ones(self.table.n_rows, dtype=bool)
        if event == "clicked":
            return self.table.clicked
        if event == "requested":
            return self.table.requested
        raise UsageError(f"unknown event '{event}'; choose from {EVENTS}")

    def room_counts(self, event: str) -> IntArray:
        """Event counts for every room appearing in at least one result."""
        t = self.table
        counts = np.bincount(t.room_idx[self._mask(event)], minlength=t.room_ids.size)
        return counts[np.unique(t.room_idx)]

    def mean_euro_utility(self, event: str) -> float:
        mask = self._mask(event)
        if not mask.any():
            raise ValidationError(f"no {event} slots in the counterfactual log")
        return float(self.euro_utility[mask].mean())

    def searches(self) -> Iterator[SearchLog]:
        """Search logs sorted by search id, slots by new position."""
        t = self.table
        for s in np.argsort(t.search_ids.astype(str), kind="stable"):
            lo, hi = t.search_start[s], t.search_start[s + 1]
            rows = lo + np.argsort(t.position[lo:hi], kind="stable")
            yield SearchLog(
                search_id=str(t.search_ids[s]),
                user_id=str(t.user_ids[t.search_user[s]]),
                timestamp=t.search_time[s],
                slots=tuple(
                    SearchResultSlot(str(t.room_ids[t.room_idx[r]]), int(t.position[r]),
                                     bool(t.clicked[r]), bool(t.requested[r]))
                    for r in rows
                ),
            )

    def save(self, directory) -> Path:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        path = out / CF_FILE
        n = write_jsonl(path, (search_to_record(s) for s in self.searches()),
                        header={"provenance": self.provenance()})
        log(logger, 20, "counterfactual_saved", path=str(path), searches=n)
        return path


def simulate_counterfactual(
    table,
    fit: ModelFit,
    policy: RankingPolicy,
    seed: int = 0,
    utility_mode: str = "expected",
    garble: bool = False,
    garble_universe: str = "listings",
    utilities: Optional[FloatArray] = None,
) -> CounterfactualLog:
    """Re-rank every search under `policy` and predict clicks and requests.

    Per-search click and request counts are the observed ones. Garbling
    relabels rooms after prediction, so every utility-based quantity is
    identical with or without it.
    """
    if utilities is None:
        utilities = fit.slot_utilities(table, utility_mode)
    positions = rerank(table, policy, utilities, seed)
    index = fit.click_index(table, positions, utilities)
    clicked, requested = predict_choices(table, index, utilities)
    out = table.with_choices(positions, clicked, requested)
    if garble:
        out = garble_rooms(out, room_universe(table, garble_universe), seed)
    cf = CounterfactualLog(
        table=out,
        utility=np.asarray(utilities, dtype=np.float64),
        euro_utility=np.asarray(fit.euro_utilities(table, utilities), dtype=np.float64),
        policy=policy,
        seed=seed,
        garbled=garble,
        utility_mode=utility_mode,
    )
    log(logger, 10, "counterfactual_simulated", policy=policy.label(), seed=seed,
        garbled=garble, clicks=int(clicked.sum()), requests=int(requested.sum()))
    return cf


def read_counterfactual(path) -> Tuple[Dict[str, Any], Tuple[SearchLog, ...]]:
    """Provenance header and search logs of a searches_cf.jsonl file."""
    records = iter_jsonl(path)
    try:
        header = next(records)
    except StopIteration:
        raise DataIOError(f"'{path}' is empty") from None
    if "provenance" not in header:
        raise DataIOError(f"'{path}' lacks a provenance header")
    try:
        searches = tuple(search_from_record(r) for r in records)
    except (KeyError, TypeError, ValueError) as err:
        raise DataIOError(f"malformed search in '{path}': {err}") from err
    return header["provenance"], searches
