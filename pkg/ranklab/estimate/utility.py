"""Expected request utility: observed x1 plus projected hidden covariates.

    U_hat = x1 b1 + X2_hat b2 + X2_hat_match b_xz
"""

from __future__ import annotations

import numpy as np

from ..domain.types import (
    BETA2_NAMES, BETA_XZ_NAMES, DerivedCovariates, UserProfile,
)
from ..src._typing import FloatArray
from .params import RequestParams
from .projection import ProjectionModel


def _hidden_coef(request_params: RequestParams, components) -> FloatArray:
    return np.array([request_params[n] for n in components], dtype=np.float64)


def expected_utility(
    user: UserProfile,
    slot_covariates: DerivedCovariates,
    request_params: RequestParams,
    projection: ProjectionModel,
) -> float:
    x1 = np.asarray(slot_covariates.x1, dtype=np.float64)
    fitted = projection.predict_row(x1, slot_covariates.position, user.z())
    value = float(x1 @ request_params.beta1)
    for name in BETA2_NAMES + BETA_XZ_NAMES:
        if name in fitted:
            value += fitted[name] * request_params[name]
    return value


def expected_utilities(table, request_params: RequestParams, projection: ProjectionModel) -> FloatArray:
    """U_hat for every row of a SlotTable, at its displayed position."""
    u = table.x1 @ request_params.beta1
    if projection.components:
        u = u + projection.predict(table) @ _hidden_coef(request_params, projection.components)
    return u


def full_utilities(table, request_params: RequestParams) -> FloatArray:
    """Deterministic request utility with the true hidden covariates."""
    return table.request_design() @ request_params.coef

