"""Concentration of events over rooms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import pandas as pd

from ..src._typing import FloatArray
from ..src.errors import UsageError, ValidationError


def _counts(event_counts) -> FloatArray:
    x = np.asarray(event_counts, dtype=np.float64).ravel()
    if x.size == 0:
        raise UsageError("no rooms to measure")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise UsageError("event counts must be finite and nonnegative")
    if x.sum() == 0:
        raise ValidationError("all event counts are zero")
    return x


@dataclass(frozen=True)
class LorenzCurve:
    share_rooms: FloatArray
    share_events: FloatArray

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.share_rooms.tolist(), self.share_events.tolist()))

    def share_held_by_bottom(self, room_share: float) -> float:
        return float(np.interp(room_share, self.share_rooms, self.share_events))

    def to_frame(self, series: str = "") -> pd.DataFrame:
        return pd.DataFrame({
            "share_rooms": self.share_rooms,
            "share_events": self.share_events,
            "series": series,
        })


def lorenz_curve(event_counts) -> LorenzCurve:
    """Cumulative event share against cumulative room share, rooms ascending.

    Starts at (0, 0); zero-count rooms must be included by the caller.
    """
    x = np.sort(_counts(event_counts))
    share_events = np.insert(np.cumsum(x) / x.sum(), 0, 0.0)
    share_events[-1] = 1.0
    share_rooms = np.arange(x.size + 1, dtype=np.float64) / x.size
    return LorenzCurve(share_rooms, share_events)


def gini(event_counts) -> float:
    """Mean absolute difference over twice the mean, from the sorted-rank form."""
    x = np.sort(_counts(event_counts))
    n = x.size
    ranks = np.arange(1, n + 1, dtype=np.float64)
    return float(2.0 * np.dot(ranks, x) / (n * x.sum()) - (n + 1.0) / n)
