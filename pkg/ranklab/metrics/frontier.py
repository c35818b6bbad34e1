"""Utility/congestion frontier over the personalization weight alpha."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from ..backend import parallel_map
from ..counterfact import PERSONALIZED, RANDOM, BLEND, RankingPolicy, simulate_counterfactual
from ..src._typing import ModelFit
from ..src.errors import UsageError
from ..src.logging_utils import get_logger, log
from .congestion import gini

logger = get_logger(__name__)

RUN_COLUMNS = ["alpha", "seed", "gini_clicks", "gini_requests", "avg_u_clicked", "avg_u_requested"]
_METRICS = RUN_COLUMNS[2:]


@dataclass(frozen=True)
class FrontierPoint:
    alpha: float
    gini_clicks: float
    gini_requests: float
    avg_utility_clicked: float
    avg_utility_requested: float
    n_seeds: int
    sd_gini_clicks: float = 0.0
    sd_gini_requests: float = 0.0
    sd_utility_clicked: float = 0.0
    sd_utility_requested: float = 0.0


@dataclass(frozen=True)
class Frontier:
    points: List[FrontierPoint]
    runs: pd.DataFrame

    @property
    def alphas(self) -> np.ndarray:
        return np.array([p.alpha for p in self.points])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points], dtype=np.float64)

    def to_frame(self) -> pd.DataFrame:
        """Per-run rows followed by the across-seed mean and sd rows."""
        runs = self.runs.assign(row="run")
        agg = pd.DataFrame([
            {"row": "mean", "alpha": p.alpha, "seed": None, "gini_clicks": p.gini_clicks,
             "gini_requests": p.gini_requests, "avg_u_clicked": p.avg_utility_clicked,
             "avg_u_requested": p.avg_utility_requested}
            for p in self.points
        ] + [
            {"row": "sd", "alpha": p.alpha, "seed": None, "gini_clicks": p.sd_gini_clicks,
             "gini_requests": p.sd_gini_requests, "avg_u_clicked": p.sd_utility_clicked,
             "avg_u_requested": p.sd_utility_requested}
            for p in self.points
        ])
        return pd.concat([runs, agg], ignore_index=True)[["row"] + RUN_COLUMNS]

    def write_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.10g")

    def as_records(self) -> List[dict]:
        return [asdict(p) for p in self.points]


def policy_for(alpha: float) -> RankingPolicy:
    """Exact polar policies at the grid endpoints, blends in between."""
    if alpha == 1.0:
        return RankingPolicy(PERSONALIZED)
    if alpha == 0.0:
        return RankingPolicy(RANDOM)
    return RankingPolicy(BLEND, alpha)


def frontier_sweep(
    table,
    fit: ModelFit,
    alphas: Sequence[float],
    n_seeds: int = 10,
    base_seed: int = 0,
    utility_mode: str = "expected",
    garble: bool = False,
    garble_universe: str = "listings",
) -> Frontier:
    """Gini and mean euro utility of predicted clicks and requests per (alpha, seed).

    Seeds are base_seed, base_seed + 1, ...; the same seed drives the random
    order and, with `garble`, the room relabelling.
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise UsageError("empty alpha grid")
    if any(not 0.0 <= a <= 1.0 for a in alphas):
        raise UsageError(f"alpha grid must lie in [0, 1], got {alphas}")
    if n_seeds < 1:
        raise UsageError(f"need at least one seed per alpha, got {n_seeds}")

    utilities = fit.slot_utilities(table, utility_mode)
    jobs = [(a, base_seed + j) for a in alphas for j in range(n_seeds)]

    def run(job):
        alpha, seed = job
        cf = simulate_counterfactual(table, fit, policy_for(alpha), seed=seed,
                                     utility_mode=utility_mode, garble=garble,
                                     garble_universe=garble_universe, utilities=utilities)
        return {
            "alpha": alpha,
            "seed": seed,
            "gini_clicks": gini(cf.room_counts("clicked")),
            "gini_requests": gini(cf.room_counts("requested")),
            "avg_u_clicked": cf.mean_euro_utility("clicked"),
            "avg_u_requested": cf.mean_euro_utility("requested"),
        }

    runs = pd.DataFrame(parallel_map(run, jobs), columns=RUN_COLUMNS)

    points = []
    for alpha in alphas:
        sub = runs[runs["alpha"] == alpha]
        mean = sub[_METRICS].mean()
        sd = sub[_METRICS].std(ddof=1) if len(sub) > 1 else pd.Series(0.0, index=_METRICS)
        points.append(FrontierPoint(
            alpha=alpha,
            gini_clicks=float(mean["gini_clicks"]),
            gini_requests=float(mean["gini_requests"]),
            avg_utility_clicked=float(mean["avg_u_clicked"]),
            avg_utility_requested=float(mean["avg_u_requested"]),
            n_seeds=len(sub),
            sd_gini_clicks=float(sd["gini_clicks"]),
            sd_gini_requests=float(sd["gini_requests"]),
            sd_utility_clicked=float(sd["avg_u_clicked"]),
            sd_utility_requested=float(sd["avg_u_requested"]),
        ))
        log(logger, 20, "frontier_point", alpha=alpha, gini_requests=points[-1].gini_requests,
            avg_u_requested=points[-1].avg_utility_requested)
    return Frontier(points, runs)


def data_equivalent_alpha(frontier: Frontier, observed_gini: float,
                          which: str = "gini_requests") -> Optional[float]:
    """First alpha on the grid where the mean Gini crosses `observed_gini`, interpolated linearly.

    None when the observed value lies outside the swept range.
    """
    order = np.argsort(frontier.alphas, kind="stable")
    a = frontier.alphas[order]
    g = frontier.column(which)[order]
    for i in range(a.size - 1):
        lo, hi = g[i], g[i + 1]
        if min(lo, hi) <= observed_gini <= max(lo, hi):
            if hi == lo:
                return float(a[i])
            return float(a[i] + (observed_gini - lo) / (hi - lo) * (a[i + 1] - a[i]))
    if a.size == 1 and g[0] == observed_gini:
        return float(a[0])
    return None
