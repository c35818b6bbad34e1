"""Linear projections of hidden room covariates on what the user sees.

Each projected component of x2 is regressed by OLS, over every search-result
row, on an intercept plus the configured regressor groups:

    x1       observed room covariates
    pos      displayed position
    pos_sq   position squared
    x1_pos   x1 interacted with position
    z        user covariates
    z_pos    user covariates interacted with position
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Mapping, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..domain.types import (
    BETA2_NAMES, BETA_XZ_NAMES, X1_NAMES, X2_NAMES, Z_NAMES,
)
from ..src._typing import BoolArray, FloatArray
from ..src.errors import UsageError
from ..src.logging_utils import get_logger, log
from .params import RequestParams

logger = get_logger(__name__)

REGRESSOR_GROUPS = ("x1", "pos", "pos_sq", "x1_pos", "z", "z_pos")
DEFAULT_REGRESSORS = REGRESSOR_GROUPS
BINARY_COMPONENTS = frozenset(X2_NAMES) - {"days_since_published"}
RANK_TOL = 1e-10


def regressor_names(groups: Sequence[str] = DEFAULT_REGRESSORS) -> Tuple[str, ...]:
    names = ["intercept"]
    for g in groups:
        if g == "x1":
            names += X1_NAMES
        elif g == "pos":
            names.append("pos")
        elif g == "pos_sq":
            names.append("pos_sq")
        elif g == "x1_pos":
            names += [f"{n}_x_pos" for n in X1_NAMES]
        elif g == "z":
            names += Z_NAMES
        elif g == "z_pos":
            names += [f"{n}_x_pos" for n in Z_NAMES]
        else:
            raise UsageError(f"unknown projection regressor group '{g}'; choose from {REGRESSOR_GROUPS}")
    return tuple(names)


def regressor_matrix(x1: FloatArray, position, z: FloatArray,
                     groups: Sequence[str] = DEFAULT_REGRESSORS) -> FloatArray:
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    pos = np.asarray(position, dtype=np.float64).reshape(-1, 1)
    parts = [np.ones_like(pos)]
    for g in groups:
        parts.append({
            "x1": lambda: x1,
            "pos": lambda: pos,
            "pos_sq": lambda: pos * pos,
            "x1_pos": lambda: x1 * pos,
            "z": lambda: z,
            "z_pos": lambda: z * pos,
        }[g]())
    return np.hstack(parts)


def projected_components(request_params: RequestParams | None) -> Tuple[str, ...]:
    """x2 components that enter the expected utility."""
    hidden = BETA2_NAMES + BETA_XZ_NAMES
    if request_params is None:
        return tuple(n for n in X2_NAMES if n in hidden)
    used = {n for n, inc in zip(request_params.names, request_params.included) if inc}
    return tuple(n for n in X2_NAMES if n in hidden and n in used)


@dataclass(frozen=True)
class ProjectionModel:
    components: Tuple[str, ...]
    regressors: Tuple[str, ...]          # regressor group names
    coef: FloatArray                     # (n_regressor_columns, n_components)
    kept: BoolArray                      # regressor columns used in the fit
    r2: FloatArray                       # per component
    n_rows: int = 0

    @property
    def column_names(self) -> Tuple[str, ...]:
        return regressor_names(self.regressors)

    def r2_map(self) -> Dict[str, float]:
        return dict(zip(self.components, self.r2.tolist()))

    def predict_matrix(self, w: FloatArray) -> FloatArray:
        fitted = np.asarray(w, dtype=np.float64) @ self.coef
        for j, name in enumerate(self.components):
            if name in BINARY_COMPONENTS:
                fitted[:, j] = np.clip(fitted[:, j], 0.0, 1.0)
        return fitted

    def predict(self, table) -> FloatArray:
        """Fitted components for every row of a SlotTable (R, n_components)."""
        return self.predict_matrix(regressor_matrix(table.x1, table.position, table.z, self.regressors))

    def predict_row(self, x1, position: int, z) -> Dict[str, float]:
        fitted = self.predict_matrix(regressor_matrix(x1, [position], z, self.regressors))[0]
        return dict(zip(self.components, fitted.tolist()))

    def to_dict(self) -> Dict[str, Any]:
        cols = self.column_names
        return {
            "regressors": list(self.regressors),
            "n_rows": self.n_rows,
            "components": {
                name: {
                    "r2": float(self.r2[j]),
                    "coefficients": {c: float(self.coef[i, j]) for i, c in enumerate(cols) if self.kept[i]},
                }
                for j, name in enumerate(self.components)
            },
        }

    @classmethod
    def from_dict(cls, rec: Mapping[str, Any]) -> "ProjectionModel":
        regressors = tuple(rec["regressors"])
        cols = regressor_names(regressors)
        comps = tuple(rec["components"])
        coef = np.zeros((len(cols), len(comps)))
        kept = np.zeros(len(cols), dtype=bool)
        r2 = np.zeros(len(comps))
        for j, name in enumerate(comps):
            entry = rec["components"][name]
            r2[j] = entry["r2"]
            for c, v in entry["coefficients"].items():
                i = cols.index(c)
                coef[i, j] = v
                kept[i] = True
        return cls(comps, regressors, coef, kept, r2, int(rec.get("n_rows", 0)))


def _independent_columns(w: FloatArray) -> BoolArray:
    if w.shape[1] == 0:
        return np.zeros(0, dtype=bool)
    _, r, piv = linalg.qr(w, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.count_nonzero(diag > RANK_TOL * max(diag[0], 1.0))) if diag.size else 0
    keep = np.zeros(w.shape[1], dtype=bool)
    keep[piv[:rank]] = True
    return keep


def fit_projection_matrix(
    w: FloatArray,
    targets: FloatArray,
    components: Sequence[str],
    regressors: Sequence[str] = DEFAULT_REGRESSORS,
) -> ProjectionModel:
    """OLS of each column of `targets` on `w`; collinear columns of `w` are dropped."""
    w = np.asarray(w, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64).reshape(w.shape[0], -1)
    keep = _independent_columns(w)
    names = regressor_names(regressors)
    if not np.all(keep):
        log(logger, 30, "projection_columns_dropped",
            columns=",".join(n for n, k in zip(names, keep) if not k))

    coef = np.zeros((w.shape[1], targets.shape[1]))
    if targets.size:
        sol, *_ = linalg.lstsq(w[:, keep], targets)
        coef[keep] = sol
    resid = targets - w @ coef
    sst = ((targets - targets.mean(axis=0)) ** 2).sum(axis=0)
    ssr = (resid ** 2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(sst > 0, 1.0 - ssr / sst, np.where(ssr <= 1e-12, 1.0, 0.0))
    return ProjectionModel(tuple(components), tuple(regressors), coef, keep, r2, int(w.shape[0]))


def fit_projection(
    table,
    request_params: RequestParams | None = None,
    regressors: Sequence[str] = DEFAULT_REGRESSORS,
) -> ProjectionModel:
    """Project the hidden x2 components used by `request_params` over all rows."""
    components = projected_components(request_params)
    w = regressor_matrix(table.x1, table.position, table.z, regressors)
    targets = np.column_stack([table.x2[:, X2_NAMES.index(n)] for n in components]) \
        if components else np.zeros((table.n_rows, 0))
    model = fit_projection_matrix(w, targets, components, regressors)
    log(logger, 20, "projection_fitted", rows=table.n_rows, components=len(components),
        min_r2=float(model.r2.min()) if model.r2.size else 1.0)
    return model
