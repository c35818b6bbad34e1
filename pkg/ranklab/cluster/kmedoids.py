"""k-medoids under the L1 distance: greedy BUILD, then best-improvement SWAP."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.metrics import silhouette_score

from ..backend import generator
from ..src._typing import FloatArray, IntArray
from ..src.errors import UsageError
from ..src.logging_utils import get_logger, log

logger = get_logger(__name__)

_TOL = 1e-9


@dataclass(frozen=True)
class ClusterAssignment:
    medoids: IntArray               # point index of each cluster's medoid, ascending
    labels: IntArray                # cluster of every point
    distances: FloatArray           # distance of every point to its medoid
    cost: float
    cost_history: Tuple[float, ...] = field(default=())
    n_swaps: int = 0

    @property
    def k(self) -> int:
        return int(self.medoids.size)

    def sizes(self) -> IntArray:
        return np.bincount(self.labels, minlength=self.k)


def pairwise_l1(features) -> FloatArray:
    x = np.asarray(features, dtype=np.float64)
    return cdist(x, x, metric="cityblock")


def _nearest(dist: FloatArray, medoids: IntArray) -> Tuple[IntArray, FloatArray]:
    d = dist[:, medoids]
    labels = np.argmin(d, axis=1)
    return labels, d[np.arange(d.shape[0]), labels]


def _build(dist: FloatArray, k: int) -> List[int]:
    medoids = [int(np.argmin(dist.sum(axis=0)))]
    nearest = dist[:, medoids[0]].copy()
    for _ in range(1, k):
        gain = np.maximum(nearest[:, None] - dist, 0.0).sum(axis=0)
        gain[medoids] = -np.inf
        c = int(np.argmax(gain))
        medoids.append(c)
        nearest = np.minimum(nearest, dist[:, c])
    return medoids


def k_medoids(features, k: int, seed: int = 0, max_iters: int = 100) -> ClusterAssignment:
    """Partition rows of `features` around k actual rows.

    SWAP takes the best single medoid/non-medoid exchange while it lowers
    the total distance; `seed` only picks among exchanges of equal cost.
    """
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise UsageError(f"k must lie in [1, {n}], got {k}")
    if not np.all(np.isfinite(x)):
        raise UsageError("features must be finite")

    dist = pairwise_l1(x)
    medoids = _build(dist, k)
    cost = float(_nearest(dist, np.array(medoids))[1].sum())
    history = [cost]
    rng = generator(seed, "kmedoids-swap")
    swaps = 0

    for _ in range(max_iters):
        is_medoid = np.zeros(n, dtype=bool)
        is_medoid[medoids] = True
        trial = np.full((k, n), np.inf)
        for i in range(k):
            others = medoids[:i] + medoids[i + 1:]
            rest = dist[:, others].min(axis=1) if others else np.full(n, np.inf)
            trial[i] = np.minimum(rest[:, None], dist).sum(axis=0)
        trial[:, is_medoid] = np.inf

        best = trial.min()
        if not best < cost - _TOL * max(1.0, cost):
            break
        ties = np.argwhere(trial <= best + _TOL * max(1.0, best))
        i, h = ties[rng.integers(len(ties))] if len(ties) > 1 else ties[0]
        medoids[int(i)] = int(h)
        cost = float(best)
        history.append(cost)
        swaps += 1
        log(logger, 10, "kmedoids_swap", iteration=swaps, cost=cost)
    else:
        log(logger, 30, "kmedoids_max_iters", max_iters=max_iters, cost=cost)

    med = np.sort(np.array(medoids, dtype=np.int64))
    labels, distances = _nearest(dist, med)
    labels[med] = np.arange(k)
    distances[med] = 0.0
    log(logger, 20, "kmedoids_done", k=k, points=n, cost=cost, swaps=swaps)
    return ClusterAssignment(med, labels.astype(np.int64), distances, cost, tuple(history), swaps)


def silhouette(features, labels) -> float:
    """Mean L1 silhouette; NaN when it is undefined (one cluster or all singletons)."""
    labels = np.asarray(labels)
    n_labels = np.unique(labels).size
    if not 2 <= n_labels <= labels.size - 1:
        return float("nan")
    return float(silhouette_score(pairwise_l1(features), labels, metric="precomputed"))
