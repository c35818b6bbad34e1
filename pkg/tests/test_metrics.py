import numpy as np
import pandas as pd
import pytest
from scipy.stats import linregress, spearmanr

from ranklab.counterfact import RankingPolicy, simulate_counterfactual
from ranklab.data import LabConfig, preset
from ranklab.domain import SlotTable
from ranklab.estimate import true_fit
from ranklab.metrics import (
    Frontier, FrontierPoint, RUN_COLUMNS, appearance_counts, avg_request_utility,
    data_equivalent_alpha, frontier_sweep, gini, index_by_position, lorenz_curve,
    model_fit_lorenz, observed_counts, policy_for, position_shares, price_cdfs, summary_report,
)
from ranklab.src.errors import UsageError, ValidationError
from ranklab.synth import generate_dataset


# ---------------------------------------
# concentration

def test_gini_constants():
    assert gini([1, 2, 3, 4]) == pytest.approx(0.25)
    assert gini([0, 0, 0, 5]) == pytest.approx(0.75)
    assert gini([3, 3, 3]) == pytest.approx(0.0)


def test_gini_ignores_order_and_scale(rng):
    x = rng.integers(0, 20, 50)
    x[0] = 1
    assert gini(x) == pytest.approx(gini(rng.permutation(x)))
    assert gini(x) == pytest.approx(gini(7 * x))


def test_gini_matches_mean_difference(rng):
    x = rng.integers(0, 10, 30).astype(float) + 1
    mad = np.abs(x[:, None] - x[None, :]).mean()
    assert gini(x) == pytest.approx(mad / (2 * x.mean()))


def test_lorenz_points():
    curve = lorenz_curve([3, 0, 1, 0])
    assert curve.points == [(0.0, 0.0), (0.25, 0.0), (0.5, 0.0), (0.75, 0.25), (1.0, 1.0)]
    assert curve.share_held_by_bottom(0.75) == pytest.approx(0.25)
    frame = curve.to_frame("clicks")
    assert list(frame.columns) == ["share_rooms", "share_events", "series"]
    assert (frame["series"] == "clicks").all()


@pytest.mark.parametrize("counts, error", [
    ([], UsageError), ([1, -1], UsageError), ([1, np.nan], UsageError), ([0, 0], ValidationError),
])
def test_bad_counts(counts, error):
    with pytest.raises(error):
        gini(counts)
    with pytest.raises(error):
        lorenz_curve(counts)


# ---------------------------------------
# frontier

def _frontier(alphas, ginis):
    points = [FrontierPoint(a, g, g, 0.0, 0.0, 1) for a, g in zip(alphas, ginis)]
    return Frontier(points, pd.DataFrame(columns=RUN_COLUMNS))


def test_data_equivalent_alpha():
    frontier = _frontier([0.0, 0.5, 1.0], [0.2, 0.4, 0.6])
    assert data_equivalent_alpha(frontier, 0.5) == pytest.approx(0.75)
    assert data_equivalent_alpha(frontier, 0.2) == pytest.approx(0.0)
    assert data_equivalent_alpha(frontier, 0.7) is None
    assert data_equivalent_alpha(_frontier([0.0], [0.3]), 0.3) == 0.0


def test_data_equivalent_alpha_unsorted_grid():
    frontier = _frontier([1.0, 0.0, 0.5], [0.6, 0.2, 0.4])
    assert data_equivalent_alpha(frontier, 0.3) == pytest.approx(0.25)


def test_policy_endpoints():
    assert policy_for(1.0).variant == "personalized"
    assert policy_for(0.0).variant == "random"
    assert policy_for(0.3) == RankingPolicy("blend", 0.3)


def test_frontier_sweep(small_table, small_fit):
    frontier = frontier_sweep(small_table, small_fit, [0.0, 0.5, 1.0], n_seeds=2, base_seed=7)
    assert list(frontier.alphas) == [0.0, 0.5, 1.0]
    assert list(frontier.runs["seed"]) == [7, 8] * 3
    assert all(p.n_seeds == 2 for p in frontier.points)

    top = frontier.points[-1]
    assert top.sd_gini_requests == 0.0
    assert top.avg_utility_requested >= frontier.points[0].avg_utility_requested

    frame = frontier.to_frame()
    assert list(frame.columns) == ["row"] + RUN_COLUMNS
    assert list(frame["row"]) == ["run"] * 6 + ["mean"] * 3 + ["sd"] * 3
    assert frontier.as_records()[0]["alpha"] == 0.0


def test_frontier_sweep_is_reproducible(small_table, small_fit):
    a = frontier_sweep(small_table, small_fit, [0.2], n_seeds=2)
    b = frontier_sweep(small_table, small_fit, [0.2], n_seeds=2)
    pd.testing.assert_frame_equal(a.runs, b.runs)


def test_frontier_garbling_keeps_utility(small_table, small_fit):
    plain = frontier_sweep(small_table, small_fit, [0.5], n_seeds=1)
    garbled = frontier_sweep(small_table, small_fit, [0.5], n_seeds=1, garble=True)
    assert garbled.points[0].avg_utility_requested == plain.points[0].avg_utility_requested


@pytest.mark.parametrize("alphas, n_seeds", [([], 2), ([0.5, 1.1], 2), ([0.5], 0)])
def test_frontier_arguments(small_table, small_fit, alphas, n_seeds):
    with pytest.raises(UsageError):
        frontier_sweep(small_table, small_fit, alphas, n_seeds=n_seeds)


def test_write_csv(tmp_path, small_table, small_fit):
    frontier = frontier_sweep(small_table, small_fit, [0.0, 1.0], n_seeds=1)
    frontier.write_csv(tmp_path / "frontier.csv")
    back = pd.read_csv(tmp_path / "frontier.csv")
    assert len(back) == 2 + 2 + 2


# ---------------------------------------
# descriptive

def test_position_shares(tiny_table):
    out = position_shares(tiny_table)
    assert list(out.index) == [1, 2, 3, 4]
    assert list(out["shown"]) == [3, 3, 3, 2]
    assert list(out["clicks"]) == [2, 1, 2, 1]
    assert list(out["requests"]) == [1, 0, 1, 1]
    assert out["click_share"].sum() == pytest.approx(1.0)
    assert out.loc[4, "p_request_given_click"] == pytest.approx(1.0)


def test_price_cdfs(tiny_table):
    cdfs = price_cdfs(tiny_table)
    assert cdfs.means["requested"] == pytest.approx((500 + 380 + 420) / 3)
    assert cdfs.means["all"] == pytest.approx(4270 / 11)
    row = cdfs.frame.set_index("price").loc[420.0]
    assert row["cdf_requested"] == pytest.approx(2 / 3)
    assert cdfs.frame["cdf_all"].iloc[-1] == 1.0


def test_summary_report(tiny_table):
    report = summary_report(tiny_table)
    assert report.counts == {
        "users": 3, "users_searching": 3, "rooms": 6, "rooms_appearing": 6,
        "searches": 3, "results": 11, "clicks": 6, "requests": 3,
    }
    assert report.averages["p_request_given_click"] == pytest.approx(0.5)
    assert report.covariates.loc["price", "mean_requested"] == pytest.approx(1300 / 3)
    assert "requested-clicked_stars" in report.covariates.columns
    text = report.to_text()
    assert text.startswith("# sample")
    assert "rooms_appearing" in text


def test_room_counts_cover_appearing_rooms(tiny_table):
    np.testing.assert_array_equal(appearance_counts(tiny_table), [2, 3, 1, 2, 1, 2])
    np.testing.assert_array_equal(observed_counts(tiny_table, "requested"), [0, 1, 1, 0, 0, 1])


def test_avg_request_utility(small_table, small_fit):
    cf = simulate_counterfactual(small_table, small_fit, RankingPolicy.parse("blend:0.5"), seed=1)
    assert avg_request_utility(cf) == pytest.approx(cf.mean_euro_utility("requested"))
    u = small_fit.slot_utilities(small_table)
    assert avg_request_utility(cf, u, small_fit.normalization) == pytest.approx(avg_request_utility(cf))


def test_model_fit_lorenz(small_table, small_fit):
    frame = model_fit_lorenz(small_table, small_fit)
    assert set(frame["series"]) == {
        "appearances", "observed_clicks", "observed_requests", "predicted_clicks", "predicted_requests",
    }
    ends = frame.groupby("series")["share_events"].last()
    assert (ends == 1.0).all()


def test_index_by_position(small_table, small_fit):
    out = index_by_position(small_table, small_fit)
    assert list(out.columns) == ["click_index", "euro_utility"]
    assert out.index.min() == 1


# ---------------------------------------
# shape on synthetic markets

ALPHAS = [a / 10 for a in range(11)]


@pytest.fixture(scope="module")
def vertical():
    ds = generate_dataset(preset("vertical").market)
    table = SlotTable.from_dataset(ds)
    return table, true_fit(table, ds.meta.true_params)


@pytest.fixture(scope="module")
def vertical_frontiers(vertical):
    table, fit = vertical
    plain = frontier_sweep(table, fit, ALPHAS, n_seeds=10)
    garbled = frontier_sweep(table, fit, ALPHAS, n_seeds=10, garble=True)
    return plain, garbled


def test_personalization_trades_utility_for_congestion(vertical_frontiers):
    plain, _ = vertical_frontiers
    assert spearmanr(plain.alphas, plain.column("avg_utility_requested")).correlation >= 0.9
    assert spearmanr(plain.alphas, plain.column("gini_requests")).correlation >= 0.9
    gini_req = plain.column("gini_requests")
    assert gini_req[-1] - gini_req[0] > 5 * plain.points[0].sd_gini_requests


def test_garbling_removes_the_congestion_gap(vertical_frontiers):
    plain, garbled = vertical_frontiers
    gap = plain.column("gini_requests")[-1] - plain.column("gini_requests")[0]
    garbled_gap = garbled.column("gini_requests")[-1] - garbled.column("gini_requests")[0]
    assert abs(garbled_gap) < 0.2 * gap
    np.testing.assert_allclose(garbled.column("avg_utility_requested"),
                               plain.column("avg_utility_requested"), rtol=0.0, atol=1e-10)


def test_click_share_falls_with_position(vertical):
    table, _ = vertical
    share = position_shares(table)["click_share"].loc[1:10]
    smoothed = share.rolling(3, center=True, min_periods=1).mean()
    assert (np.diff(smoothed.to_numpy()) < 0).all()
    assert share.loc[1] > share.loc[10]


def test_requests_do_not_follow_position():
    cfg = LabConfig.defaults().with_overrides({
        "market.n_users": "1000",
        "market.searches_per_user_mean": "10",
        "market.click_rate": "0.1",
        "market.request_rate": "0.3",
        "market.true_click.utility": "0",
        "market.true_click.position_x_utility": "0",
    })
    table = SlotTable.from_dataset(generate_dataset(cfg.market))
    rows = table.clicked & (table.position <= 10)
    fit = linregress(table.position[rows], table.requested[rows].astype(float))
    assert abs(fit.slope) < 3 * fit.stderr
    shares = position_shares(table)
    assert shares.loc[1, "click_share"] > shares.loc[10, "click_share"]
