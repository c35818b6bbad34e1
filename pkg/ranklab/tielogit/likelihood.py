"""Log-likelihood and gradient of the two-tier tied logit over many searches.

Instances are grouped by the size m of their chosen block and evaluated in
fixed-size partitions, so every subset sum is a dense matrix product. The
per-partition results are reduced in partition order; the partitioning
depends only on the data and `partition_size`, never on the worker count.

For one instance, with w_T = sign_T / (S_D + S_T)^2,

    dP = dS_D * sum_T w_T S_T - S_D * sum_c e_c x_c (sum_{T containing c} w_T)

and the gradient of log P is dP / P, with sign_T = (-1)^|T|. Instances whose
alternating sum lost most of its digits take P and dP from the ordering
recursion in `instance.py` instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from ..backend import parallel_map
from ..data.base import ArrayLoader
from ..src._typing import BoolArray, FloatArray, IntArray
from ..src.errors import (
    DataIOError, ExactMethodCapError, NonFiniteIndexError, PrecisionLossError, UsageError,
)
from ..src.logging_utils import get_logger, log
from .instance import CANCELLATION_TOL, DEFAULT_EXACT_CAP, ChoiceInstance, ordered_tie_prob, subset_matrix

logger = get_logger(__name__)

STAGES = ("request", "click")
SUBSET_BUDGET = 1 << 22     # instances * 2^m per evaluation block


@dataclass(frozen=True)
class InstanceGroup:
    """All instances whose chosen block has exactly m members."""

    m: int
    chosen: IntArray            # (n, m) row indices
    unchosen: IntArray          # flat row indices, instance-major
    unchosen_start: IntArray    # (n,) offsets into `unchosen`
    unchosen_count: IntArray    # (n,)
    search: IntArray            # (n,) search index of each instance

    @property
    def n(self) -> int:
        return int(self.search.size)


@dataclass(frozen=True)
class ChoiceData:
    """Design rows plus the non-degenerate instances of one estimation stage."""

    design: FloatArray                  # (R, K)
    groups: Tuple[InstanceGroup, ...]
    n_skipped: int = 0
    exact_cap: int = DEFAULT_EXACT_CAP
    partition_size: int = 2048

    @property
    def n_params(self) -> int:
        return int(self.design.shape[1])

    @property
    def n_instances(self) -> int:
        return sum(g.n for g in self.groups)

    # ------------------------------------------------------------------
    @classmethod
    def from_choice_sets(
        cls,
        design: FloatArray,
        set_index: IntArray,
        chosen: BoolArray,
        exact_cap: int = DEFAULT_EXACT_CAP,
        partition_size: int = 2048,
    ) -> "ChoiceData":
        """Build from per-row choice-set labels (nondecreasing) and chosen flags."""
        design = np.asarray(design, dtype=np.float64)
        set_index = np.asarray(set_index, dtype=np.int64)
        chosen = np.asarray(chosen, dtype=bool)
        n_sets = int(set_index.max()) + 1 if set_index.size else 0

        m_s = np.bincount(set_index[chosen], minlength=n_sets)
        n_s = np.bincount(set_index, minlength=n_sets)
        d_s = n_s - m_s
        present = n_s > 0
        valid = (m_s >= 1) & (d_s >= 1)
        too_big = valid & (m_s > exact_cap)
        if np.any(too_big):
            raise ExactMethodCapError(
                f"choice set {int(np.flatnonzero(too_big)[0])} has {int(m_s[too_big].max())} "
                f"chosen items, above the exact-method cap of {exact_cap}"
            )

        used = valid[set_index]
        keep_rows = np.flatnonzero(used)
        remap = np.full(set_index.size, -1, dtype=np.int64)
        remap[keep_rows] = np.arange(keep_rows.size)
        rows_set = set_index[keep_rows]
        rows_chosen = chosen[keep_rows]
        rows_local = np.arange(keep_rows.size)

        groups: List[InstanceGroup] = []
        for m in np.unique(m_s[valid]):
            in_group = (m_s == m) & valid
            sets = np.flatnonzero(in_group)
            member = in_group[rows_set]
            c_rows = rows_local[member & rows_chosen].reshape(sets.size, int(m))
            d_rows = rows_local[member & ~rows_chosen]
            counts = d_s[sets].astype(np.int64)
            starts = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
            groups.append(InstanceGroup(int(m), c_rows, d_rows, starts, counts, sets))

        return cls(
            design=design[keep_rows],
            groups=tuple(groups),
            n_skipped=int(np.count_nonzero(present & ~valid)),
            exact_cap=exact_cap,
            partition_size=partition_size,
        )

    @classmethod
    def for_stage(cls, table, design: FloatArray, stage: str,
                  exact_cap: int = DEFAULT_EXACT_CAP, partition_size: int = 2048) -> "ChoiceData":
        """Choice sets of a stage over a SlotTable.

        click: all slots of a search, chosen = clicked.
        request: the clicked slots of a search, chosen = requested.
        """
        if stage == "click":
            rows = np.arange(table.n_rows)
            chosen = table.clicked
        elif stage == "request":
            rows = np.flatnonzero(table.clicked)
            chosen = table.requested[rows]
        else:
            raise UsageError(f"unknown stage '{stage}'; expected one of {STAGES}")
        data = cls.from_choice_sets(
            np.asarray(design)[rows], table.search_idx[rows], chosen, exact_cap, partition_size,
        )
        log(logger, 10, "choice_data_built", stage=stage, instances=data.n_instances,
            skipped=data.n_skipped, rows=data.design.shape[0],
            max_chosen=max((g.m for g in data.groups), default=0))
        return data

    @classmethod
    def from_instances(cls, instances: Sequence[ChoiceInstance], **kw) -> "ChoiceData":
        rows, labels, flags = [], [], []
        for i, inst in enumerate(instances):
            for block, flag in ((inst.chosen_rows, True), (inst.unchosen_rows, False)):
                if block is None:
                    raise UsageError("instances need covariate rows")
                block = np.atleast_2d(np.asarray(block, dtype=np.float64))
                if block.size == 0:
                    continue
                rows.append(block)
                labels.append(np.full(block.shape[0], i))
                flags.append(np.full(block.shape[0], flag))
        if not rows:
            raise UsageError("no covariate rows")
        return cls.from_choice_sets(np.vstack(rows), np.concatenate(labels), np.concatenate(flags), **kw)

    # ------------------------------------------------------------------
    def varying_columns(self) -> BoolArray:
        """Columns that differ across the rows of at least one instance."""
        out = np.zeros(self.n_params, dtype=bool)
        x = self.design
        for g in self.groups:
            xc = x[g.chosen]                                   # (n, m, K)
            xd = x[g.unchosen]
            hi = np.maximum(xc.max(axis=1), np.maximum.reduceat(xd, g.unchosen_start, axis=0))
            lo = np.minimum(xc.min(axis=1), np.minimum.reduceat(xd, g.unchosen_start, axis=0))
            out |= np.any(hi > lo, axis=0)
        return out

    def work_items(self) -> List[Tuple[int, int, int]]:
        """(group, start, stop) blocks in fixed evaluation order."""
        items = []
        for gi, g in enumerate(self.groups):
            size = min(self.partition_size, max(1, SUBSET_BUDGET >> g.m))
            loader = ArrayLoader(g.search, batch_size=size)
            items.extend((gi,) + loader.bounds(b) for b in range(len(loader)))
        return items

    def _block(self, v: FloatArray, item, with_grad: bool):
        gi, a, b = item
        g = self.groups[gi]
        members, signs = subset_matrix(g.m)

        vc = v[g.chosen[a:b]]                                   # (n, m)
        counts = g.unchosen_count[a:b]
        lo = g.unchosen_start[a]
        hi = g.unchosen_start[b - 1] + counts[-1]
        d_rows = g.unchosen[lo:hi]
        starts = g.unchosen_start[a:b] - lo
        vd = v[d_rows]

        shift = np.maximum(vc.max(axis=1), np.maximum.reduceat(vd, starts))
        ec = np.exp(vc - shift[:, None])
        ed = np.exp(vd - np.repeat(shift, counts))
        s_d = np.add.reduceat(ed, starts)                       # (n,)
        s_t = ec @ members.T                                    # (n, 2^m - 1)
        denom = s_d[:, None] + s_t
        terms = s_t / denom
        p = -(signs * terms).sum(axis=1)
        ill = np.flatnonzero(p <= CANCELLATION_TOL * terms.sum(axis=1))

        x = self.design
        if with_grad:
            w = signs / (denom * denom)                         # (n, 2^m - 1)
            ds_d = np.add.reduceat(ed[:, None] * x[d_rows], starts, axis=0)   # (n, K)
            coef_c = ec * (w @ members)                         # (n, m)
            inner = np.einsum("nm,nmk->nk", coef_c, x[g.chosen[a:b]])
            dp = ds_d * (w * s_t).sum(axis=1)[:, None] - s_d[:, None] * inner
        for k in ill:
            if with_grad:
                p[k], dp[k] = ordered_tie_prob(ec[k], s_d[k], x[g.chosen[a + k]], ds_d[k])
            else:
                p[k] = ordered_tie_prob(ec[k], s_d[k])[0]

        bad = ~(p > 0.0)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise PrecisionLossError(
                f"tie probability {p[k]:.3g} underflows in choice set {int(g.search[a + k])}"
            )
        logp = np.log(np.minimum(p, 1.0))
        if not with_grad:
            return logp, None
        return logp, (dp / p[:, None]).sum(axis=0)

    def _index(self, params) -> FloatArray:
        beta = np.asarray(params, dtype=np.float64).ravel()
        if beta.size != self.n_params:
            raise UsageError(f"expected {self.n_params} parameters, got {beta.size}")
        v = self.design @ beta
        if not np.all(np.isfinite(v)):
            raise NonFiniteIndexError("non-finite utility index; check parameters and covariates")
        return v

    def evaluate(self, params, with_grad: bool = True) -> Tuple[float, FloatArray | None]:
        v = self._index(params)
        parts = parallel_map(lambda item: self._block(v, item, with_grad), self.work_items())
        ll = 0.0
        grad = np.zeros(self.n_params) if with_grad else None
        for logp, g in parts:
            ll += float(logp.sum())
            if with_grad:
                grad += g
        return ll, grad

    def instance_logprobs(self, params) -> Tuple[IntArray, FloatArray]:
        """(choice-set index, log P) per instance, in evaluation order."""
        v = self._index(params)
        items = self.work_items()
        parts = parallel_map(lambda item: self._block(v, item, False)[0], items)
        sets = np.concatenate([self.groups[gi].search[a:b] for gi, a, b in items]) if items else np.zeros(0, int)
        logp = np.concatenate(parts) if parts else np.zeros(0)
        return sets, logp


def log_likelihood(params, data: ChoiceData) -> float:
    return data.evaluate(params, with_grad=False)[0]


def grad_log_likelihood(params, data: ChoiceData) -> FloatArray:
    return data.evaluate(params, with_grad=True)[1]


def value_and_grad(params, data: ChoiceData) -> Tuple[float, FloatArray]:
    return data.evaluate(params, with_grad=True)


def dump_instance_logprobs(params, data: ChoiceData, path, search_ids=None) -> Path:
    """Write one CSV row per instance: choice set, chosen count, log P."""
    sets, logp = data.instance_logprobs(params)
    chosen = np.concatenate([np.full(g.n, g.m) for g in data.groups]) if data.groups else np.zeros(0, int)
    order = np.argsort(sets, kind="stable")
    # work items walk groups in order, so chosen counts line up with `sets`
    frame = pd.DataFrame({
        "choice_set": sets[order],
        "search_id": (np.asarray(search_ids, dtype=object)[sets[order]] if search_ids is not None
                      else sets[order]),
        "n_chosen": chosen[order],
        "log_prob": logp[order],
    })
    out = Path(path)
    try:
        frame.to_csv(out, index=False, float_format="%.17g")
    except OSError as err:
        raise DataIOError(f"cannot write '{out}': {err}") from err
    log(logger, 20, "instance_logprobs_dumped", path=str(out), instances=len(frame))
    return out
