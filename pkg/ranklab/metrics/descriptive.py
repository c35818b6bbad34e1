"""Descriptive views of search logs: positions, prices, sample summary, model fit."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from scipy import stats

from ..counterfact import RankingPolicy, STATUS_QUO, simulate_counterfactual
from ..domain.types import REQUEST_NAMES, Z_NAMES
from ..estimate.params import significance_stars
from ..src._typing import FloatArray, ModelFit
from ..src.errors import ValidationError
from .congestion import lorenz_curve


def avg_request_utility(cf_log, utilities: Optional[FloatArray] = None, normalization=None) -> float:
    """Mean euro utility over predicted requested slots.

    Without `utilities` the log's own euro utilities are used; otherwise the
    given utilities are converted with `normalization` when one is passed.
    """
    mask = cf_log.table.requested
    if not mask.any():
        raise ValidationError("no predicted requests to average over")
    if utilities is None:
        values = cf_log.euro_utility
    else:
        values = np.asarray(utilities, dtype=np.float64)
        if normalization is not None:
            values = normalization.euro_utility(values)
    return float(values[mask].mean())


def position_shares(table) -> pd.DataFrame:
    """Event shares and conditional rates by displayed position."""
    frame = pd.DataFrame({
        "position": table.position,
        "shown": 1,
        "clicks": table.clicked.astype(np.int64),
        "requests": table.requested.astype(np.int64),
    })
    out = frame.groupby("position").sum()
    out["click_share"] = out["clicks"] / max(int(out["clicks"].sum()), 1)
    out["request_share"] = out["requests"] / max(int(out["requests"].sum()), 1)
    out["p_click"] = out["clicks"] / out["shown"]
    out["p_request"] = out["requests"] / out["shown"]
    out["p_request_given_click"] = (out["requests"] / out["clicks"]).where(out["clicks"] > 0)
    return out


@dataclass(frozen=True)
class PriceCDFs:
    frame: pd.DataFrame
    means: Dict[str, float]


def price_cdfs(table, grid: Optional[FloatArray] = None) -> PriceCDFs:
    """Empirical price CDFs of all results, clicked and requested slots on one grid."""
    price = table.price
    groups = {"all": price, "clicked": price[table.clicked], "requested": price[table.requested]}
    if grid is None:
        grid = np.unique(price)
    grid = np.asarray(grid, dtype=np.float64)
    frame = pd.DataFrame({"price": grid})
    means = {}
    for name, values in groups.items():
        values = np.sort(values)
        if values.size:
            frame[f"cdf_{name}"] = np.searchsorted(values, grid, side="right") / values.size
            means[name] = float(values.mean())
        else:
            frame[f"cdf_{name}"] = np.nan
            means[name] = float("nan")
    return PriceCDFs(frame, means)


def _welch(a: FloatArray, b: FloatArray):
    diff = float(a.mean() - b.mean()) if a.size and b.size else float("nan")
    if a.size < 2 or b.size < 2 or (np.var(a) == 0 and np.var(b) == 0):
        return diff, float("nan")
    return diff, float(stats.ttest_ind(a, b, equal_var=False).pvalue)


@dataclass(frozen=True)
class SummaryReport:
    counts: Dict[str, int]
    averages: Dict[str, float]
    covariates: pd.DataFrame

    def to_text(self) -> str:
        lines = ["# sample"]
        lines += [f"{k:<28s}{v:>12d}" for k, v in self.counts.items()]
        lines += ["", "# averages"]
        lines += [f"{k:<28s}{v:>12.4f}" for k, v in self.averages.items()]
        lines += ["", "# covariates", self.covariates.to_string(float_format=lambda x: f"{x:.4f}")]
        return "\n".join(lines) + "\n"


def summary_report(table) -> SummaryReport:
    """Sample counts, per-unit rates and covariate means with Welch-tested differences."""
    n_clicks = int(table.clicked.sum())
    n_requests = int(table.requested.sum())
    active_users = np.unique(table.search_user)
    counts = {
        "users": int(table.user_ids.size),
        "users_searching": int(active_users.size),
        "rooms": int(table.room_ids.size),
        "rooms_appearing": int(np.unique(table.room_idx).size),
        "searches": table.n_searches,
        "results": table.n_rows,
        "clicks": n_clicks,
        "requests": n_requests,
    }
    averages = {
        "searches_per_user": table.n_searches / max(active_users.size, 1),
        "results_per_search": table.n_rows / max(table.n_searches, 1),
        "clicks_per_search": n_clicks / max(table.n_searches, 1),
        "requests_per_search": n_requests / max(table.n_searches, 1),
        "p_click": n_clicks / max(table.n_rows, 1),
        "p_request_given_click": n_requests / n_clicks if n_clicks else float("nan"),
    }

    design = np.column_stack([table.request_design(), table.z])
    names = list(REQUEST_NAMES) + list(Z_NAMES)
    groups = {"all": np.ones(table.n_rows, dtype=bool), "clicked": table.clicked,
              "requested": table.requested}
    rows: List[dict] = []
    for j, name in enumerate(names):
        col = design[:, j]
        row = {"covariate": name}
        for g, mask in groups.items():
            row[f"mean_{g}"] = float(col[mask].mean()) if mask.any() else float("nan")
            row[f"sd_{g}"] = float(col[mask].std(ddof=1)) if mask.sum() > 1 else float("nan")
        for a, b in (("clicked", "all"), ("requested", "all"), ("requested", "clicked")):
            diff, p = _welch(col[groups[a]], col[groups[b]])
            row[f"{a}-{b}"] = diff
            row[f"{a}-{b}_stars"] = significance_stars(p)
        rows.append(row)
    covariates = pd.DataFrame(rows).set_index("covariate")
    return SummaryReport(counts, averages, covariates)


def appearance_counts(table) -> np.ndarray:
    counts = np.bincount(table.room_idx, minlength=table.room_ids.size)
    return counts[np.unique(table.room_idx)]


def _event_counts(table, mask) -> np.ndarray:
    counts = np.bincount(table.room_idx[mask], minlength=table.room_ids.size)
    return counts[np.unique(table.room_idx)]


def observed_counts(table, event: str) -> np.ndarray:
    """Per-room counts of observed clicks or requests over rooms appearing in the logs."""
    mask = {"clicked": table.clicked, "requested": table.requested}[event]
    return _event_counts(table, mask)


def model_fit_lorenz(table, fit: ModelFit, utility_mode: str = "expected") -> pd.DataFrame:
    """Lorenz series of appearances, observed events and events predicted at the observed positions."""
    predicted = simulate_counterfactual(table, fit, RankingPolicy(STATUS_QUO), utility_mode=utility_mode)
    series = {
        "appearances": appearance_counts(table),
        "observed_clicks": observed_counts(table, "clicked"),
        "observed_requests": observed_counts(table, "requested"),
        "predicted_clicks": predicted.room_counts("clicked"),
        "predicted_requests": predicted.room_counts("requested"),
    }
    frames = [lorenz_curve(c).to_frame(label) for label, c in series.items() if np.sum(c) > 0]
    return pd.concat(frames, ignore_index=True)


def index_by_position(table, fit: ModelFit, utility_mode: str = "expected") -> pd.DataFrame:
    """Mean click index and mean euro utility by displayed position."""
    u = fit.slot_utilities(table, utility_mode)
    frame = pd.DataFrame({
        "position": table.position,
        "click_index": fit.click_index(table, table.position, u),
        "euro_utility": fit.euro_utilities(table, u),
    })
    return frame.groupby("position").mean()
