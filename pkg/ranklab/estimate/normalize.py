"""Euro-scaled coefficients.

Request coefficients are divided by |b_price|, so price maps to -1 and every
other coefficient reads as a willingness to pay in euros per month. Click
coefficients are divided by |b_U * b_price|: with utility measured in euros,
the utility coefficient becomes 1 and position effects read in euros.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
import pandas as pd

from ..src._typing import FloatArray
from ..src.errors import NormalizationError
from .params import ClickParams, RequestParams


@dataclass(frozen=True)
class EuroReport:
    price_coef: float
    utility_coef: float
    request: Dict[str, float]
    request_se: Dict[str, float]
    click: Dict[str, float]
    click_se: Dict[str, float]

    @property
    def request_scale(self) -> float:
        return abs(self.price_coef)

    def euro_utility(self, utilities: FloatArray) -> FloatArray:
        return np.asarray(utilities, dtype=np.float64) / self.request_scale

    def to_dict(self) -> Dict[str, Any]:
        def _clean(d):
            return {k: (None if not np.isfinite(v) else float(v)) for k, v in d.items()}

        return {
            "price_coef": self.price_coef,
            "utility_coef": self.utility_coef,
            "request": _clean(self.request),
            "request_se": _clean(self.request_se),
            "click": _clean(self.click),
            "click_se": _clean(self.click_se),
        }

    def table(self) -> pd.DataFrame:
        rows = [("request", n, v, self.request_se.get(n, np.nan)) for n, v in self.request.items()]
        rows += [("click", n, v, self.click_se.get(n, np.nan)) for n, v in self.click.items()]
        return pd.DataFrame(rows, columns=["stage", "covariate", "euros", "se"])


def _scaled(params, scale: float):
    coef, se = {}, {}
    for n, c, s, inc in zip(params.names, params.coef, params.standard_errors, params.included):
        if inc:
            coef[n] = float(c) / scale
            se[n] = float(s) / scale
    return coef, se


def normalize_params(request_params: RequestParams, click_params: ClickParams | None = None) -> EuroReport:
    price = request_params["price"]
    if not request_params.included[request_params.names.index("price")] or price == 0.0:
        raise NormalizationError("price coefficient is zero or not estimated; cannot express euros")
    request, request_se = _scaled(request_params, abs(price))

    if click_params is None:
        return EuroReport(price, float("nan"), request, request_se, {}, {})

    beta_u = click_params.beta_u
    if not click_params.included[click_params.names.index("utility")] or beta_u == 0.0:
        raise NormalizationError("utility coefficient is zero or not estimated; cannot express euros")
    scale = abs(beta_u * price)
    click, click_se = _scaled(click_params, scale)
    # utility columns are rescaled to euros first
    for name in ("utility", "position_x_utility"):
        if name in click:
            click[name] *= abs(price)
            click_se[name] *= abs(price)
    return EuroReport(price, beta_u, request, request_se, click, click_se)
