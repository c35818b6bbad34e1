"""Two-tier tie probability for a single choice instance.

With iid standard Gumbel shocks, the probability that every chosen item
beats every unchosen one is

    P = sum over non-empty subsets T of C of (-1)^(|T|+1) * S_T / (S_D + S_T)

where S_X is the sum of exp(v) over X. A single chosen item gives the plain
logit e_c / (e_c + S_D). When the alternating sum has cancelled most of its
digits (several chosen items, all far below S_D) the same quantity is taken
from the sum over orderings of the chosen block,

    f(S) = sum over c in S of e_c * f(S - c) / (S_D + S_S),    f({}) = 1,

whose terms are all positive.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..backend import generator
from ..src._typing import FloatArray
from ..src.errors import (
    ExactMethodCapError, NonFiniteIndexError, PrecisionLossError, UsageError,
)

DEFAULT_EXACT_CAP = 20
MC_CHUNK = 100_000
# below this fraction of the absolute terms the alternating sum is recomputed
CANCELLATION_TOL = 1e-6


@dataclass(frozen=True)
class ChoiceInstance:
    chosen_values: FloatArray
    unchosen_values: FloatArray
    chosen_rows: Optional[FloatArray] = field(default=None, compare=False)
    unchosen_rows: Optional[FloatArray] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "chosen_values", np.asarray(self.chosen_values, dtype=np.float64).ravel())
        object.__setattr__(self, "unchosen_values", np.asarray(self.unchosen_values, dtype=np.float64).ravel())

    @classmethod
    def from_rows(cls, chosen_rows, unchosen_rows, params) -> "ChoiceInstance":
        """Instance whose values are rows @ params."""
        beta = np.asarray(params, dtype=np.float64)
        c = np.asarray(chosen_rows, dtype=np.float64).reshape(-1, beta.size)
        d = np.asarray(unchosen_rows, dtype=np.float64).reshape(-1, beta.size)
        return cls(c @ beta, d @ beta, c, d)

    @property
    def degenerate(self) -> bool:
        return self.chosen_values.size == 0 or self.unchosen_values.size == 0

    def shifted(self, c: float) -> "ChoiceInstance":
        return ChoiceInstance(self.chosen_values + c, self.unchosen_values + c,
                              self.chosen_rows, self.unchosen_rows)


@functools.lru_cache(maxsize=None)
def subset_matrix(m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Membership matrix (2^m - 1, m) of the non-empty subsets, and their signs."""
    codes = np.arange(1, 1 << m, dtype=np.int64)
    members = ((codes[:, None] >> np.arange(m)) & 1).astype(np.float64)
    signs = np.where(members.sum(axis=1) % 2 == 1, -1.0, 1.0)
    members.setflags(write=False)
    signs.setflags(write=False)
    return members, signs


def ordered_tie_prob(
    ec: FloatArray,
    s_d: float,
    xc: Optional[FloatArray] = None,
    ds_d: Optional[FloatArray] = None,
) -> Tuple[float, Optional[FloatArray]]:
    """P and, given chosen rows `xc` (m, K) and dS_D/dbeta, dP/dbeta by the ordering recursion.

    `ec` and `s_d` must share the same shift. Costs O(m 2^m) scalar steps.
    """
    ec = np.asarray(ec, dtype=np.float64)
    m = ec.size
    n_sub = 1 << m
    members, _ = subset_matrix(m)
    s_s = np.concatenate([[0.0], members @ ec])
    f = np.zeros(n_sub)
    f[0] = 1.0
    grad = xc is not None
    if grad:
        exc = ec[:, None] * np.asarray(xc, dtype=np.float64)      # (m, K)
        ds_s = np.vstack([np.zeros(exc.shape[1]), members @ exc])
        g = np.zeros((n_sub, exc.shape[1]))

    for code in range(1, n_sub):
        den = s_d + s_s[code]
        num = 0.0
        dnum = 0.0
        for c in range(m):
            bit = 1 << c
            if code & bit:
                prev = code ^ bit
                num += ec[c] * f[prev]
                if grad:
                    dnum = dnum + exc[c] * f[prev] + ec[c] * g[prev]
        f[code] = num / den
        if grad:
            g[code] = (dnum - f[code] * (ds_d + ds_s[code])) / den
    return float(f[-1]), (g[-1].copy() if grad else None)


def signed_tie_prob(ec: FloatArray, s_d) -> Tuple[FloatArray, FloatArray]:
    """Alternating subset sum for rows of `ec` (n, m) against `s_d` (n,).

    Returns (P, sum of the absolute terms); their ratio measures the digits lost.
    """
    members, signs = subset_matrix(ec.shape[-1])
    s_t = ec @ members.T
    terms = s_t / (np.asarray(s_d)[..., None] + s_t)
    return -(terms * signs).sum(axis=-1), terms.sum(axis=-1)


def tie_prob(instance: ChoiceInstance, exact_cap: int = DEFAULT_EXACT_CAP) -> float:
    vc, vd = instance.chosen_values, instance.unchosen_values
    if vc.size == 0 or vd.size == 0:
        return 1.0
    if vc.size > exact_cap:
        raise ExactMethodCapError(
            f"{vc.size} chosen items exceed the exact-method cap of {exact_cap}"
        )
    if not (np.all(np.isfinite(vc)) and np.all(np.isfinite(vd))):
        raise NonFiniteIndexError("non-finite utility index in choice instance")

    shift = max(vc.max(), vd.max())
    ec = np.exp(vc - shift)
    s_d = float(np.exp(vd - shift).sum())
    p, scale = signed_tie_prob(ec, s_d)
    p = float(p)
    if p <= CANCELLATION_TOL * float(scale):
        p = ordered_tie_prob(ec, s_d)[0]
    if not p > 0.0:
        raise PrecisionLossError(f"tie probability {p:.3g} underflows")
    return min(p, 1.0)


def mc_tie_prob(instance: ChoiceInstance, n_draws: int, seed: int = 0) -> Tuple[float, float]:
    """Frequency of min(chosen + e) > max(unchosen + e) over `n_draws` Gumbel draws.

    Returns (estimate, standard error).
    """
    if n_draws < 1:
        raise UsageError("n_draws must be >= 1")
    if instance.degenerate:
        return 1.0, 0.0

    vc, vd = instance.chosen_values, instance.unchosen_values
    rng = generator(seed, "tie-oracle")
    hits, left = 0, int(n_draws)
    while left:
        n = min(left, MC_CHUNK)
        lo = (vc + rng.gumbel(size=(n, vc.size))).min(axis=1)
        hi = (vd + rng.gumbel(size=(n, vd.size))).max(axis=1)
        hits += int(np.count_nonzero(lo > hi))
        left -= n

    p = hits / n_draws
    return p, float(np.sqrt(p * (1.0 - p) / n_draws))
