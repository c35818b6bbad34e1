import logging
from dataclasses import replace

import numpy as np
import pytest

from ranklab.cluster import (
    FILTER_NAMES, ClusteredFit, cluster_profile, cluster_users, filter_features, fit_by_cluster,
    k_medoids, load_clustered_fit, pairwise_l1, save_clustered_fit, save_clustering,
    search_filters, silhouette, user_clusters,
)
from ranklab.data import ClusterConfig, EstimationConfig, preset
from ranklab.domain import SlotTable
from ranklab.estimate import fit_pipeline
from ranklab.src.errors import DegenerateClusterError, UsageError
from ranklab.synth import generate_dataset


@pytest.fixture
def planted(rng):
    centers = np.array([[0.0, 0.0, 0.0], [50.0, 0.0, 50.0], [0.0, 80.0, 20.0]])
    truth = np.repeat(np.arange(3), 15)
    return centers[truth] + rng.uniform(-3, 3, size=(truth.size, 3)), truth


# ---------------------------------------
# k-medoids

def test_every_point_its_own_medoid(rng):
    x = rng.normal(size=(6, 2))
    out = k_medoids(x, 6)
    assert out.cost == 0.0
    np.testing.assert_array_equal(out.medoids, np.arange(6))
    np.testing.assert_array_equal(out.labels, np.arange(6))


def test_single_cluster_is_exact(rng):
    x = rng.normal(size=(25, 3))
    out = k_medoids(x, 1)
    totals = pairwise_l1(x).sum(axis=0)
    assert out.cost == pytest.approx(totals.min())
    assert out.medoids[0] == int(np.argmin(totals))


def test_planted_clusters(planted):
    x, truth = planted
    out = k_medoids(x, 3, seed=1)
    for c in range(3):
        assert len(set(out.labels[truth == c])) == 1
    assert sorted(out.sizes()) == [15, 15, 15]
    assert silhouette(x, out.labels) > 0.8


def test_cost_history_never_increases(rng):
    x = rng.integers(0, 100, size=(40, 4)).astype(float)
    out = k_medoids(x, 4, seed=3)
    assert all(b <= a for a, b in zip(out.cost_history, out.cost_history[1:]))
    assert out.cost == out.cost_history[-1]
    assert out.n_swaps == len(out.cost_history) - 1
    assert out.distances.sum() == pytest.approx(out.cost)


def test_medoids_sorted_and_self_assigned(rng):
    x = np.repeat(rng.normal(size=(4, 2)), 3, axis=0)
    out = k_medoids(x, 3)
    assert list(out.medoids) == sorted(out.medoids)
    np.testing.assert_array_equal(out.labels[out.medoids], np.arange(3))
    assert np.all(out.distances[out.medoids] == 0.0)


@pytest.mark.parametrize("k", [0, 5])
def test_k_out_of_range(k):
    with pytest.raises(UsageError):
        k_medoids(np.zeros((4, 2)), k)


def test_non_finite_features():
    with pytest.raises(UsageError):
        k_medoids(np.array([[0.0], [np.inf]]), 1)


def test_silhouette_undefined():
    x = np.arange(4.0)[:, None]
    assert np.isnan(silhouette(x, [0, 0, 0, 0]))
    assert np.isnan(silhouette(x, [0, 1, 2, 3]))


# ---------------------------------------
# filter features

def test_search_filters(tiny_table):
    f = search_filters(tiny_table)
    col = {n: j for j, n in enumerate(FILTER_NAMES)}
    assert len(FILTER_NAMES) == 18
    assert f[:, col["gender_match"]].tolist() == [True, True, True]
    assert f[:, col["age_match"]].tolist() == [True, False, True]
    assert f[:, col["balcony"]].tolist() == [False, False, True]
    assert not f[:, col["eixample"]].any()


def test_filter_features(tiny_table):
    features = filter_features(tiny_table)
    assert list(features.index) == ["u1", "u2", "u3"]
    assert features.loc["u3", "balcony"] == 100.0
    assert features.loc["u2", "age_match"] == 0.0
    assert features.loc["u1", "occupation_match"] == 100.0


def test_short_searches_do_not_count(tiny_table, caplog):
    with caplog.at_level(logging.WARNING, logger="ranklab"):
        features = filter_features(tiny_table, min_search_size=5)
    assert (features.to_numpy() == 0.0).all()
    assert any("users_without_qualifying_searches" in r.getMessage() for r in caplog.records)
    with pytest.raises(UsageError):
        search_filters(tiny_table, min_search_size=0)


# ---------------------------------------
# clusters and fits

def test_user_clusters(tiny_table):
    out = user_clusters(tiny_table, ["u3", "u1"], [1, 0])
    np.testing.assert_array_equal(out, [0, -1, 1])


def test_cluster_profile(tiny_table):
    profile = cluster_profile(tiny_table, np.array([0, 1, 0]))
    assert list(profile["users"]) == [2, 1]
    assert profile["share_pct"].sum() == pytest.approx(100.0)
    assert profile.loc[0, "requests"] == pytest.approx(1.5)
    assert profile.loc[1, "age"] == 31


def test_clustered_fit_with_equal_parts(small_table, small_fit):
    labels = np.arange(small_table.user_ids.size) % 2
    fit = ClusteredFit((small_fit, small_fit), labels)
    u = small_fit.slot_utilities(small_table)
    np.testing.assert_allclose(fit.slot_utilities(small_table), u)
    np.testing.assert_allclose(fit.euro_utilities(small_table, u), small_fit.euro_utilities(small_table, u))
    np.testing.assert_allclose(fit.click_index(small_table, small_table.position, u),
                               small_fit.click_index(small_table, small_table.position, u))


def test_clustered_fit_needs_every_user(small_table, small_fit):
    fit = ClusteredFit((small_fit,), np.full(small_table.user_ids.size, -1))
    with pytest.raises(UsageError):
        fit.slot_utilities(small_table)


def test_empty_cluster(small_table):
    with pytest.raises(DegenerateClusterError):
        fit_by_cluster(small_table, np.full(small_table.user_ids.size, -1), k=1)


def test_cluster_users(small_table):
    result = cluster_users(small_table, ClusterConfig(k=3, seed=2))
    assert result.assignment.k == 3
    assert len(result.cluster_frame()) == len(result.features)
    assert list(result.medoid_frame()["cluster"]) == [0, 1, 2]
    assert result.silhouette <= 1.0 or np.isnan(result.silhouette)


def test_clustered_fit_roundtrip(tmp_path, small_table, small_fit):
    result = cluster_users(small_table, ClusterConfig(k=2))
    labels = user_clusters(small_table, result.user_ids, result.assignment.labels)
    fit = ClusteredFit((small_fit, small_fit), labels)
    save_clustering(result, tmp_path)
    save_clustered_fit(fit, tmp_path)
    loaded = load_clustered_fit(tmp_path, small_table)
    assert loaded.k == 2
    np.testing.assert_array_equal(loaded.user_cluster, labels)
    np.testing.assert_allclose(loaded.slot_utilities(small_table), fit.slot_utilities(small_table))


@pytest.fixture(scope="module")
def regimes():
    """Half the users act on one set of preferences, half on another."""
    base = preset("small")
    truths = ({"price": -0.01, "balcony": 1.5, "tv": 0.0}, {"price": -0.01, "balcony": -1.0, "tv": 1.0})
    sets = [generate_dataset(base.with_overrides({f"market.true_request.{k}": str(v) for k, v in t.items()}).market)
            for t in truths]
    group = {u.user_id: i % 2 for i, u in enumerate(sets[0].users)}
    searches = tuple(s for i, ds in enumerate(sets) for s in ds.searches if group[s.user_id] == i)
    table = SlotTable.from_dataset(replace(sets[0], searches=searches))
    labels = np.array([group[str(u)] for u in table.user_ids])
    return table, labels, truths


def test_one_cluster_is_the_pooled_fit(regimes):
    table, _, _ = regimes
    pooled = fit_pipeline(table, EstimationConfig())
    clustered = fit_by_cluster(table, np.zeros(table.user_ids.size, dtype=int), k=1)
    assert clustered.k == 1
    np.testing.assert_allclose(clustered.fits[0].request.coef, pooled.request.coef, rtol=1e-8)
    np.testing.assert_allclose(clustered.fits[0].click.coef, pooled.click.coef, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(clustered.slot_utilities(table), pooled.slot_utilities(table), rtol=1e-8)


def test_planted_regimes_are_recovered(regimes):
    table, labels, truths = regimes
    clustered = fit_by_cluster(table, labels, k=2)
    assert clustered.k == 2
    np.testing.assert_array_equal(clustered.user_cluster, labels)
    for fit, truth in zip(clustered.fits, truths):
        req = fit.request
        for name in ("balcony", "price"):
            assert abs(req[name] - truth[name]) < max(4 * req.se(name), 0.3 * abs(truth[name])), name
    assert clustered.fits[0].request["balcony"] > clustered.fits[1].request["balcony"]

    u = clustered.slot_utilities(table)
    for c, fit in enumerate(clustered.fits):
        mask = labels[table.search_user] == c
        rows = labels[table.user_idx] == c
        np.testing.assert_allclose(u[rows], fit.slot_utilities(table.select_searches(mask)))
