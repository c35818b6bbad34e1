"""Two-stage pipeline and its file outputs.

request model -> projection of hidden covariates -> U_hat -> click model
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import pandas as pd

from ..data.config import EstimationConfig
from ..data.dataset_base import read_json, write_json
from ..src._typing import FloatArray, IntArray
from ..src.errors import DataIOError, UsageError
from ..src.logging_utils import get_logger, log
from .fit import CLICK_COLUMNS, REQUEST_COLUMNS, click_design, fit_click_model, fit_request_model
from .normalize import EuroReport, normalize_params
from .params import ClickParams, RequestParams
from .projection import ProjectionModel, fit_projection
from .utility import expected_utilities, full_utilities

logger = get_logger(__name__)

UTILITY_MODES = ("expected", "full")


@dataclass(frozen=True)
class PooledFit:
    """One set of parameters for every user."""

    request: RequestParams
    projection: ProjectionModel
    click: ClickParams

    @property
    def normalization(self) -> EuroReport:
        return normalize_params(self.request, self.click)

    def slot_utilities(self, table, mode: str = "expected") -> FloatArray:
        if mode == "expected":
            return expected_utilities(table, self.request, self.projection)
        if mode == "full":
            return full_utilities(table, self.request)
        raise UsageError(f"unknown utility mode '{mode}'; choose from {UTILITY_MODES}")

    def euro_utilities(self, table, utilities: FloatArray) -> FloatArray:
        return self.normalization.euro_utility(utilities)

    def click_index(self, table, positions: IntArray, utilities: FloatArray) -> FloatArray:
        return click_design(positions, utilities) @ self.click.coef

    def to_dict(self) -> Dict[str, Any]:
        out = {"request": self.request.to_dict(), "click": self.click.to_dict()}
        try:
            out["normalization"] = self.normalization.to_dict()
        except ArithmeticError as err:
            out["normalization"] = {"error": str(err)}
        return out

    @classmethod
    def from_dicts(cls, params: Mapping[str, Any], projection: Mapping[str, Any]) -> "PooledFit":
        return cls(
            RequestParams.from_dict(params["request"]),
            ProjectionModel.from_dict(projection),
            ClickParams.from_dict(params["click"]),
        )


def fit_pipeline(table, config: EstimationConfig | None = None) -> PooledFit:
    config = config or EstimationConfig()
    request = fit_request_model(table, config=config)
    projection = fit_projection(table, request, config.projection_regressors)
    utilities = expected_utilities(table, request, projection)
    click = fit_click_model(table, utilities, config=config)
    fit = PooledFit(request, projection, click)
    log(logger, 20, "pipeline_fitted", searches=table.n_searches,
        request_loglik=request.loglik, click_loglik=click.loglik)
    return fit


def fit_columns(table, config: EstimationConfig | None = None) -> Dict[str, Dict[int, Any]]:
    """The nested specifications of both stages; click columns use the full-model U_hat."""
    config = config or EstimationConfig()
    request = {k: fit_request_model(table, cols, config) for k, cols in REQUEST_COLUMNS.items()}
    projection = fit_projection(table, request[max(request)], config.projection_regressors)
    utilities = expected_utilities(table, request[max(request)], projection)
    click = {k: fit_click_model(table, utilities, cols, config) for k, cols in CLICK_COLUMNS.items()}
    return {"request": request, "click": click}


def column_table(fits: Mapping[int, Any]) -> pd.DataFrame:
    """Side-by-side coefficients: one row per covariate, "coef (se) stars" per column."""
    columns: Dict[str, List[str]] = {}
    names = None
    for k in sorted(fits):
        frame = fits[k].table()
        names = fits[k].names
        cells = []
        for n in names:
            if n in frame.index:
                row = frame.loc[n]
                cells.append(f"{row['coef']:.4g}{row['stars']} ({row['se']:.3g})")
            else:
                cells.append("")
        columns[f"({k})"] = cells
    table = pd.DataFrame(columns, index=pd.Index(names or (), name="covariate"))
    footer = pd.DataFrame(
        {f"({k})": [f"{fits[k].loglik:.2f}", f"{fits[k].pseudo_r2:.4f}", str(fits[k].n_instances)]
         for k in sorted(fits)},
        index=pd.Index(["loglik", "pseudo_r2", "instances"], name="covariate"),
    )
    return pd.concat([table, footer])


PARAMS_FILE = "params.json"
PROJECTION_FILE = "projection.json"


def save_fit(fit: PooledFit, directory, extra: Optional[Dict[str, Any]] = None) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    params = fit.to_dict()
    if extra:
        params.update(extra)
    write_json(out / PARAMS_FILE, params)
    write_json(out / PROJECTION_FILE, fit.projection.to_dict())
    log(logger, 20, "fit_saved", path=str(out))
    return out


def load_fit(directory) -> PooledFit:
    path = Path(directory)
    try:
        return PooledFit.from_dicts(read_json(path / PARAMS_FILE), read_json(path / PROJECTION_FILE))
    except (KeyError, TypeError, ValueError) as err:
        raise DataIOError(f"malformed fit in '{path}': {err}") from err


def true_fit(table, true_params: Mapping[str, Mapping[str, float]],
             regressors=None) -> PooledFit:
    """A fit carrying the generator's parameters, with the projection estimated on `table`."""
    request = RequestParams.from_coefficients(true_params.get("request", {}))
    click = ClickParams.from_coefficients(true_params.get("click", {}))
    projection = fit_projection(table, request, regressors or EstimationConfig().projection_regressors)
    return PooledFit(request, projection, click)


__all__ = [
    "PooledFit", "fit_pipeline", "fit_columns", "column_table", "save_fit", "load_fit",
    "true_fit", "UTILITY_MODES",
]
