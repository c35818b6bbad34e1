"""Per-cluster estimation and a fit that scores each user with their cluster's parameters."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Sequence, Tuple

import numpy as np
import pandas as pd

from ..backend import parallel_map
from ..data.config import ClusterConfig, EstimationConfig
from ..data.dataset_base import read_json, write_json
from ..domain.types import Z_NAMES
from ..estimate import PooledFit, fit_pipeline
from ..src._typing import FloatArray, IntArray
from ..src.errors import DataIOError, DegenerateClusterError, UsageError, ValidationError
from ..src.logging_utils import get_logger, log
from .features import FILTER_NAMES, filter_features
from .kmedoids import ClusterAssignment, k_medoids, silhouette

logger = get_logger(__name__)

CLUSTERS_FILE = "clusters.csv"
MEDOIDS_FILE = "medoids.csv"
PROFILE_FILE = "cluster_profile.csv"


def params_file(c: int) -> str:
    return f"params_{c}.json"


def user_clusters(table, user_ids: Sequence[str], labels: IntArray) -> IntArray:
    """Cluster of every user in `table.user_ids` order; -1 for users not clustered."""
    lookup = dict(zip(map(str, user_ids), np.asarray(labels, dtype=np.int64)))
    return np.array([lookup.get(str(u), -1) for u in table.user_ids], dtype=np.int64)


def cluster_searches(table, user_cluster: IntArray, c: int) -> np.ndarray:
    return user_cluster[table.search_user] == c


@dataclass(frozen=True)
class ClusteredFit:
    """One PooledFit per cluster; every row is scored by its user's cluster."""

    fits: Tuple[PooledFit, ...]
    user_cluster: IntArray          # aligned with table.user_ids

    @property
    def k(self) -> int:
        return len(self.fits)

    def _row_cluster(self, table) -> IntArray:
        c = self.user_cluster[table.user_idx]
        if np.any(c < 0):
            raise UsageError("some searching users have no cluster")
        return c

    def _per_cluster(self, table, score) -> FloatArray:
        out = np.empty(table.n_rows, dtype=np.float64)
        row_cluster = self._row_cluster(table)
        for c, fit in enumerate(self.fits):
            rows = row_cluster == c
            if rows.any():
                sub = table.select_searches(cluster_searches(table, self.user_cluster, c))
                out[rows] = score(fit, sub, rows)
        return out

    def slot_utilities(self, table, mode: str = "expected") -> FloatArray:
        return self._per_cluster(table, lambda fit, sub, rows: fit.slot_utilities(sub, mode))

    def euro_utilities(self, table, utilities: FloatArray) -> FloatArray:
        u = np.asarray(utilities, dtype=np.float64)
        return self._per_cluster(table, lambda fit, sub, rows: fit.euro_utilities(sub, u[rows]))

    def click_index(self, table, positions: IntArray, utilities: FloatArray) -> FloatArray:
        pos = np.asarray(positions)
        u = np.asarray(utilities, dtype=np.float64)
        return self._per_cluster(table, lambda fit, sub, rows: fit.click_index(sub, pos[rows], u[rows]))


def fit_by_cluster(table, user_cluster: IntArray, k: int,
                   config: EstimationConfig | None = None) -> ClusteredFit:
    """Run the full two-stage pipeline separately on each cluster's searches."""
    config = config or EstimationConfig()
    user_cluster = np.asarray(user_cluster, dtype=np.int64)

    def run(c: int) -> PooledFit:
        mask = cluster_searches(table, user_cluster, c)
        if not mask.any():
            raise DegenerateClusterError(f"cluster {c} has no searches")
        try:
            return fit_pipeline(table.select_searches(mask), config)
        except DegenerateClusterError:
            raise
        except ValidationError as err:
            raise DegenerateClusterError(f"cluster {c}: {err}") from err

    fits = tuple(parallel_map(run, range(k)))
    log(logger, 20, "clusters_fitted", k=k)
    return ClusteredFit(fits, user_cluster)


def cluster_profile(table, user_cluster: IntArray) -> pd.DataFrame:
    """Share of users, mean demographics and per-user activity for each cluster."""
    user_cluster = np.asarray(user_cluster, dtype=np.int64)
    n_users = table.user_ids.size
    searches = np.bincount(table.search_user, minlength=n_users)
    clicks = np.bincount(table.search_user, weights=table.clicks_per_search(), minlength=n_users)
    requests = np.bincount(table.search_user, weights=table.requests_per_search(), minlength=n_users)
    z = np.zeros((n_users, len(Z_NAMES)))
    z[table.user_idx] = table.z

    frame = pd.DataFrame(z, columns=list(Z_NAMES))
    frame["cluster"] = user_cluster
    frame["searches"] = searches
    frame["clicks"] = clicks
    frame["requests"] = requests
    frame = frame[frame["cluster"] >= 0]
    out = frame.groupby("cluster").mean()
    out.insert(0, "users", frame.groupby("cluster").size())
    out.insert(1, "share_pct", 100.0 * out["users"] / out["users"].sum())
    return out


@dataclass(frozen=True)
class ClusteringResult:
    features: pd.DataFrame
    assignment: ClusterAssignment
    silhouette: float

    @property
    def user_ids(self) -> np.ndarray:
        return self.features.index.to_numpy()

    def medoid_frame(self) -> pd.DataFrame:
        med = self.features.iloc[self.assignment.medoids].copy()
        med.insert(0, "cluster", np.arange(self.assignment.k))
        return med

    def cluster_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "user_id": self.user_ids,
            "cluster": self.assignment.labels,
            "distance": self.assignment.distances,
        })


def cluster_users(table, config: ClusterConfig | None = None) -> ClusteringResult:
    config = config or ClusterConfig()
    features = filter_features(table, config.min_search_size)
    assignment = k_medoids(features.to_numpy(), config.k, config.seed, config.max_iters)
    score = silhouette(features.to_numpy(), assignment.labels)
    log(logger, 20, "users_clustered", k=config.k, users=len(features), cost=assignment.cost,
        silhouette=score)
    return ClusteringResult(features, assignment, score)


def save_clustering(result: ClusteringResult, directory) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result.cluster_frame().to_csv(out / CLUSTERS_FILE, index=False, float_format="%.10g")
        result.medoid_frame().to_csv(out / MEDOIDS_FILE, float_format="%.4f")
    except OSError as err:
        raise DataIOError(f"cannot write clustering to '{out}': {err}") from err
    return out


def save_clustered_fit(fit: ClusteredFit, directory) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for c, f in enumerate(fit.fits):
        write_json(out / params_file(c), {"params": f.to_dict(), "projection": f.projection.to_dict()})
    return out


def load_clustered_fit(directory, table) -> ClusteredFit:
    """Per-cluster params_<c>.json files plus the user assignment in clusters.csv."""
    path = Path(directory)
    try:
        frame = pd.read_csv(path / CLUSTERS_FILE, dtype={"user_id": str})
    except (OSError, ValueError) as err:
        raise DataIOError(f"cannot read '{path / CLUSTERS_FILE}': {err}") from err
    k = int(frame["cluster"].max()) + 1 if len(frame) else 0
    fits = []
    for c in range(k):
        rec: Dict = read_json(path / params_file(c))
        try:
            fits.append(PooledFit.from_dicts(rec["params"], rec["projection"]))
        except (KeyError, TypeError, ValueError) as err:
            raise DataIOError(f"malformed '{params_file(c)}': {err}") from err
    return ClusteredFit(tuple(fits), user_clusters(table, frame["user_id"], frame["cluster"]))


__all__ = [
    "ClusteredFit", "ClusteringResult", "FILTER_NAMES", "cluster_users", "fit_by_cluster",
    "cluster_profile", "user_clusters", "save_clustering", "save_clustered_fit", "load_clustered_fit",
]
