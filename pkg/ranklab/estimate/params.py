"""Fitted choice-model parameters.

Coefficients are always stored in the full covariate layout of their stage;
covariates left out of a specification carry a zero coefficient and a NaN
standard error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Mapping, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..domain.types import (
    BETA2_NAMES, BETA_XZ_NAMES, CLICK_NAMES, POSITION_NAMES, REQUEST_NAMES, X1_NAMES,
)
from ..src._typing import BoolArray, FloatArray
from ..src.tree_util import block_slices, flatten_blocks, unflatten_blocks


def significance_stars(p: float) -> str:
    if not np.isfinite(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


@dataclass(frozen=True)
class FittedChoiceModel:
    coef: FloatArray
    standard_errors: FloatArray
    included: BoolArray
    loglik: float
    loglik0: float
    n_instances: int = 0
    n_skipped: int = 0
    iterations: int = 0
    message: str = ""
    converged: bool = True

    NAMES: ClassVar[Tuple[str, ...]] = ()
    BLOCKS: ClassVar[Dict[str, int]] = {}

    def __post_init__(self):
        for name in ("coef", "standard_errors"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        inc = np.array(self.included, dtype=bool)
        inc.setflags(write=False)
        object.__setattr__(self, "included", inc)
        if self.coef.size != len(self.NAMES):
            raise ValueError(f"{type(self).__name__} expects {len(self.NAMES)} coefficients")

    # ------------------------------------------------------------------
    @property
    def names(self) -> Tuple[str, ...]:
        return self.NAMES

    @property
    def pseudo_r2(self) -> float:
        if self.loglik0 == 0.0:
            return 0.0
        return 1.0 - self.loglik / self.loglik0

    def __getitem__(self, name: str) -> float:
        return float(self.coef[self.NAMES.index(name)])

    def se(self, name: str) -> float:
        return float(self.standard_errors[self.NAMES.index(name)])

    @classmethod
    def _treedef(cls):
        _, treedef = flatten_blocks({name: np.zeros(size) for name, size in cls.BLOCKS.items()})
        return treedef

    def blocks(self) -> Dict[str, Any]:
        return unflatten_blocks(self.coef, self._treedef())

    def block(self, name: str) -> FloatArray:
        return self.coef[block_slices(self._treedef())[name]]

    def table(self) -> pd.DataFrame:
        """Coefficient table: coef, se, z, two-sided normal p-value, stars."""
        with np.errstate(divide="ignore", invalid="ignore"):
            z = self.coef / self.standard_errors
        p = 2.0 * stats.norm.sf(np.abs(z))
        frame = pd.DataFrame(
            {"coef": self.coef, "se": self.standard_errors, "z": z, "p_value": p},
            index=pd.Index(self.NAMES, name="covariate"),
        )
        frame["stars"] = [significance_stars(x) for x in p]
        return frame[self.included]

    # ------------------------------------------------------------------
    def to_dict(self) -> Dict[str, Any]:
        def _num(x):
            return None if not np.isfinite(x) else float(x)

        return {
            "coefficients": {n: float(c) for n, c, i in zip(self.NAMES, self.coef, self.included) if i},
            "standard_errors": {n: _num(s) for n, s, i in zip(self.NAMES, self.standard_errors, self.included) if i},
            "loglik": self.loglik,
            "loglik0": self.loglik0,
            "pseudo_r2": self.pseudo_r2,
            "n_instances": self.n_instances,
            "n_skipped": self.n_skipped,
            "iterations": self.iterations,
            "message": self.message,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, rec: Mapping[str, Any]):
        coefs = rec["coefficients"]
        ses = rec.get("standard_errors", {})
        unknown = set(coefs) - set(cls.NAMES)
        if unknown:
            raise ValueError(f"unknown coefficients {sorted(unknown)}")
        return cls(
            coef=np.array([coefs.get(n, 0.0) for n in cls.NAMES]),
            standard_errors=np.array([
                np.nan if ses.get(n) is None else ses[n] for n in cls.NAMES
            ]),
            included=np.array([n in coefs for n in cls.NAMES]),
            loglik=float(rec.get("loglik", np.nan)),
            loglik0=float(rec.get("loglik0", np.nan)),
            n_instances=int(rec.get("n_instances", 0)),
            n_skipped=int(rec.get("n_skipped", 0)),
            iterations=int(rec.get("iterations", 0)),
            message=str(rec.get("message", "")),
            converged=bool(rec.get("converged", True)),
        )

    @classmethod
    def from_coefficients(cls, values: Mapping[str, float]):
        """Parameters with given coefficients and no fit statistics."""
        return cls.from_dict({"coefficients": {n: float(values.get(n, 0.0)) for n in cls.NAMES}})


@dataclass(frozen=True)
class RequestParams(FittedChoiceModel):
    """Request utility U = x1 b1 + x2 b2 + (x2 (x) Z) b_xz."""

    NAMES: ClassVar[Tuple[str, ...]] = REQUEST_NAMES
    BLOCKS: ClassVar[Dict[str, int]] = {
        "beta1": len(X1_NAMES), "beta2": len(BETA2_NAMES), "beta_xz": len(BETA_XZ_NAMES),
    }

    @property
    def beta1(self) -> FloatArray:
        return self.block("beta1")

    @property
    def beta2(self) -> FloatArray:
        return self.block("beta2")

    @property
    def beta_xz(self) -> FloatArray:
        return self.block("beta_xz")


@dataclass(frozen=True)
class ClickParams(FittedChoiceModel):
    """Click propensity g(pos) b_pos + U b_U + pos U b_posU."""

    NAMES: ClassVar[Tuple[str, ...]] = CLICK_NAMES
    BLOCKS: ClassVar[Dict[str, int]] = {"beta_pos": len(POSITION_NAMES), "beta_u": 1, "beta_pos_u": 1}

    @property
    def beta_pos(self) -> FloatArray:
        return self.block("beta_pos")

    @property
    def beta_u(self) -> float:
        return float(self.block("beta_u")[0])

    @property
    def beta_pos_u(self) -> float:
        return float(self.block("beta_pos_u")[0])
