"""Maximum-likelihood fits of the request and click stages.

Both stages maximize the two-tier tied logit from a zero start with BFGS on
internally standardized columns; coefficients and standard errors are
mapped back to raw units. Standard errors come from the inverse of the
observed information, a central finite difference of the analytic gradient.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Dict, Optional, Sequence, Tuple, Type

import numpy as np

from ..data.config import EstimationConfig
from ..domain.covariates import position_features
from ..domain.types import (
    AMENITIES, CLICK_NAMES, MATCH_NAMES, REQUEST_NAMES,
)
from ..optimizers import BFGS
from ..src._typing import BoolArray, FloatArray
from ..src.errors import IdentificationError, UsageError, ValidationError
from ..src.logging_utils import get_logger, log
from ..tielogit import ChoiceData, dump_instance_logprobs, value_and_grad
from .params import ClickParams, FittedChoiceModel, RequestParams

logger = get_logger(__name__)

REQUEST_COLUMNS: Dict[int, Tuple[str, ...]] = {
    1: ("price",),
    2: ("price", "n_tenants", "missing_n_tenants", "days_since_published") + MATCH_NAMES,
    3: ("price", "n_tenants", "missing_n_tenants", "days_since_published") + MATCH_NAMES + AMENITIES,
    4: REQUEST_NAMES,
}
CLICK_COLUMNS: Dict[int, Tuple[str, ...]] = {
    1: ("position",),
    2: ("position", "position_sq"),
    3: ("position", "position_sq", "pos1", "pos2", "pos3"),
    4: CLICK_NAMES,
}


def click_design(position, utility) -> FloatArray:
    """[g(pos), U, pos * U] rows."""
    pos = np.asarray(position, dtype=np.float64)
    u = np.asarray(utility, dtype=np.float64)
    return np.column_stack([position_features(pos), u, pos * u])


def _include_mask(names: Sequence[str], include: Optional[Sequence[str]]) -> BoolArray:
    if include is None:
        return np.ones(len(names), dtype=bool)
    unknown = set(include) - set(names)
    if unknown:
        raise UsageError(f"unknown covariates {sorted(unknown)}")
    return np.array([n in set(include) for n in names], dtype=bool)


def observed_information(objective, theta: FloatArray, step: float) -> FloatArray:
    """Symmetrized central difference of the gradient of `objective` (a negative loglik)."""
    k = theta.size
    hess = np.zeros((k, k))
    for j in range(k):
        h = step * max(1.0, abs(theta[j]))
        e = np.zeros(k)
        e[j] = h
        hess[:, j] = (objective(theta + e)[1] - objective(theta - e)[1]) / (2.0 * h)
    return 0.5 * (hess + hess.T)


def _covariance(info: FloatArray) -> FloatArray:
    try:
        cov = np.linalg.inv(info)
        if np.all(np.isfinite(cov)) and np.all(np.diag(cov) > 0):
            return cov
    except np.linalg.LinAlgError:
        pass
    log(logger, 30, "information_matrix_singular", size=info.shape[0])
    return np.linalg.pinv(info)


def fit_choice_model(
    design: FloatArray,
    table,
    stage: str,
    model: Type[FittedChoiceModel],
    include: Optional[Sequence[str]] = None,
    config: EstimationConfig | None = None,
) -> FittedChoiceModel:
    config = config or EstimationConfig()
    names = model.NAMES
    mask = _include_mask(names, include)
    used = [n for n, m in zip(names, mask) if m]

    data = ChoiceData.for_stage(table, np.asarray(design)[:, mask], stage,
                                exact_cap=config.exact_cap, partition_size=config.partition_size)
    if data.n_instances == 0:
        raise ValidationError(f"no informative {stage} choice sets to estimate from")
    varying = data.varying_columns()
    if not np.all(varying):
        raise IdentificationError(used[int(np.flatnonzero(~varying)[0])])

    scale = data.design.std(axis=0)
    scale[scale == 0] = 1.0
    scaled = replace(data, design=data.design / scale)

    def objective(theta):
        ll, grad = value_and_grad(theta, scaled)
        return -ll, -grad

    theta0 = np.zeros(scaled.n_params)
    loglik0 = -objective(theta0)[0]
    result = BFGS(objective, gtol=config.gtol, ftol=config.ftol, max_iter=config.max_iter).minimize(theta0)

    cov_theta = _covariance(observed_information(objective, result.x, config.hessian_step))
    se_theta = np.sqrt(np.clip(np.diag(cov_theta), 0.0, None))

    coef = np.zeros(len(names))
    se = np.full(len(names), np.nan)
    coef[mask] = result.x / scale
    se[mask] = se_theta / scale
    fitted = model(
        coef=coef, standard_errors=se, included=mask,
        loglik=-float(result.fun), loglik0=float(loglik0),
        n_instances=data.n_instances, n_skipped=data.n_skipped,
        iterations=int(result.nit), message=str(result.message), converged=bool(result.success),
    )
    log(logger, 20, "stage_fitted", stage=stage, covariates=len(used), instances=data.n_instances,
        loglik=fitted.loglik, pseudo_r2=fitted.pseudo_r2, iterations=fitted.iterations,
        converged=fitted.converged)

    if config.debug_dump:
        dump_instance_logprobs(coef[mask], data, f"{config.debug_dump}.{stage}.csv",
                               search_ids=table.search_ids)
    return fitted


def fit_request_model(
    table,
    include: Optional[Sequence[str]] = None,
    config: EstimationConfig | None = None,
) -> RequestParams:
    """Request stage: among clicked slots, requested ones beat the rest."""
    return fit_choice_model(table.request_design(), table, "request", RequestParams, include, config)


def fit_click_model(
    table,
    utilities: FloatArray,
    include: Optional[Sequence[str]] = None,
    config: EstimationConfig | None = None,
) -> ClickParams:
    """Click stage over [g(pos), U_hat, pos * U_hat]; clicked slots beat the rest."""
    utilities = np.asarray(utilities, dtype=np.float64)
    if utilities.shape != (table.n_rows,):
        raise UsageError(f"expected {table.n_rows} utilities, got shape {utilities.shape}")
    return fit_choice_model(click_design(table.position, utilities), table, "click",
                            ClickParams, include, config)
