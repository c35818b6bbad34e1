import numpy as np
import pandas as pd
import pytest

from ranklab.data import EstimationConfig, LabConfig, preset
from ranklab.domain import REQUEST_NAMES, SlotTable, derive_covariates
from ranklab.estimate import (
    ClickParams, PooledFit, RequestParams, click_design, column_table, expected_utility,
    expected_utilities, fit_click_model, fit_pipeline, fit_projection_matrix,
    fit_request_model, load_fit, normalize_params, regressor_names, save_fit, significance_stars,
    true_fit,
)
from ranklab.src.errors import IdentificationError, NormalizationError, UsageError
from ranklab.synth import coefficient_vector, expected_request_utility, generate_dataset


@pytest.fixture(scope="module")
def recovery_table():
    return SlotTable.from_dataset(generate_dataset(preset("small").market))


@pytest.fixture(scope="module")
def recovery_fit(recovery_table):
    return fit_pipeline(recovery_table, EstimationConfig())


# ---------------------------------------
# euros

def test_euro_normalization():
    request = RequestParams.from_coefficients({"price": -0.4818 / 520.57, "gender_match": 0.4818})
    report = normalize_params(request)
    assert report.request["price"] == pytest.approx(-1.0)
    assert report.request["gender_match"] == pytest.approx(520.57)


def test_click_normalization():
    request = RequestParams.from_coefficients({"price": -0.002})
    click = ClickParams.from_coefficients({"position": -0.1, "utility": 2.0, "position_x_utility": 0.5})
    report = normalize_params(request, click)
    assert report.click["utility"] == pytest.approx(1.0)
    assert report.click["position"] == pytest.approx(-0.1 / 0.004)
    assert report.click["position_x_utility"] == pytest.approx(0.25)
    np.testing.assert_allclose(report.euro_utility([0.2, -0.4]), [100.0, -200.0])
    assert set(report.table()["stage"]) == {"request", "click"}


def test_normalization_needs_price():
    with pytest.raises(NormalizationError):
        normalize_params(RequestParams.from_coefficients({"balcony": 1.0}))
    request = RequestParams.from_coefficients({"price": -0.002})
    with pytest.raises(NormalizationError):
        normalize_params(request, ClickParams.from_coefficients({"position": -0.1}))


def test_zero_price_fit_still_serializes():
    fit = PooledFit(RequestParams.from_coefficients({}), None, ClickParams.from_coefficients({}))
    assert "error" in fit.to_dict()["normalization"]


# ---------------------------------------
# params

def test_param_blocks():
    p = RequestParams.from_coefficients({"price": -1.0, "balcony": 2.0, "age_match": 3.0})
    assert p.beta1[0] == -1.0
    assert p.beta2[p.BLOCKS["beta2"] - 1] == 0.0
    assert 2.0 in p.beta2
    assert p.beta_xz.tolist() == [0.0, 3.0, 0.0]
    assert p.coef.size == len(REQUEST_NAMES)


def test_param_dict_roundtrip():
    p = RequestParams.from_dict({"coefficients": {"price": -0.5, "tv": 0.1},
                                 "standard_errors": {"price": 0.1, "tv": None}})
    assert p.included.sum() == 2
    back = RequestParams.from_dict(p.to_dict())
    np.testing.assert_array_equal(back.coef, p.coef)
    assert np.isnan(back.se("tv"))
    assert list(p.table().index) == ["price", "tv"]
    with pytest.raises(ValueError):
        RequestParams.from_dict({"coefficients": {"rooftop_pool": 1.0}})


@pytest.mark.parametrize("p, stars", [(0.001, "***"), (0.03, "**"), (0.07, "*"), (0.2, ""), (np.nan, "")])
def test_significance_stars(p, stars):
    assert significance_stars(p) == stars


# ---------------------------------------
# projection

def test_projection_recovers_linear_targets(rng):
    n = 200
    w = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
    coef = np.array([[1.0, -2.0], [0.5, 0.0], [0.0, 3.0]])
    model = fit_projection_matrix(w, w @ coef, ("a", "b"), regressors=("pos", "pos_sq"))
    np.testing.assert_allclose(model.coef, coef, atol=1e-10)
    np.testing.assert_allclose(model.r2, [1.0, 1.0])


def test_projection_drops_collinear_columns(rng):
    n = 100
    x = rng.normal(size=n)
    w = np.column_stack([np.ones(n), x, 2 * x])
    model = fit_projection_matrix(w, (3 * x)[:, None], ("a",), regressors=("pos", "pos_sq"))
    assert model.kept.sum() == 2
    np.testing.assert_allclose(w @ model.coef[:, 0], 3 * x, atol=1e-10)


def test_projection_roundtrip(small_table, small_fit):
    model = small_fit.projection
    again = type(model).from_dict(model.to_dict())
    np.testing.assert_allclose(again.predict(small_table), model.predict(small_table))
    assert model.column_names == regressor_names(model.regressors)


def test_unknown_regressor_group():
    with pytest.raises(UsageError):
        regressor_names(("x1", "weather"))


def test_binary_components_are_clipped(small_table, small_fit):
    fitted = small_fit.projection.predict(small_table)
    comps = small_fit.projection.components
    for j, name in enumerate(comps):
        if name != "days_since_published":
            assert fitted[:, j].min() >= 0.0 and fitted[:, j].max() <= 1.0


def test_expected_utility_row_matches_table(tiny_dataset, tiny_table):
    fit = true_fit(tiny_table, {"request": {"price": -0.01, "balcony": 1.0, "gender_match": 0.3}},
                   regressors=("x1", "pos"))
    table_u = expected_utilities(tiny_table, fit.request, fit.projection)
    users = {u.user_id: u for u in tiny_dataset.users}
    rooms = {r.room_id: r for r in tiny_dataset.listings}
    s = tiny_dataset.searches[0]
    for j, slot in enumerate(s.slots):
        cov = derive_covariates(users[s.user_id], rooms[slot.room_id], s.timestamp, slot.position,
                                winsor_cap=tiny_table.winsor_cap)
        assert expected_utility(users[s.user_id], cov, fit.request, fit.projection) == \
            pytest.approx(table_u[j])


# ---------------------------------------
# fitting

def test_price_only_request_model(recovery_table):
    fit = fit_request_model(recovery_table, include=("price",))
    assert fit.included.sum() == 1
    assert fit["price"] < 0
    assert fit.loglik > fit.loglik0
    assert np.isnan(fit.se("balcony"))


def test_identification_error(tiny_table):
    with pytest.raises(IdentificationError) as info:
        fit_request_model(tiny_table, include=("price", "ac"))
    assert info.value.covariate == "ac"


def test_unknown_covariate(tiny_table):
    with pytest.raises(UsageError):
        fit_request_model(tiny_table, include=("price", "jacuzzi"))


def test_click_model_needs_one_utility_per_row(tiny_table):
    with pytest.raises(UsageError):
        fit_click_model(tiny_table, np.zeros(3))


def test_click_design_columns():
    d = click_design([1, 3], [2.0, -1.0])
    np.testing.assert_array_equal(d[:, -2:], [[2.0, 2.0], [-1.0, -3.0]])


def test_parameter_recovery(recovery_fit):
    req = recovery_fit.request
    for name, truth in (("price", -0.01), ("balcony", 1.0), ("tv", 0.6)):
        assert np.sign(req[name]) == np.sign(truth)
        assert abs(req[name] - truth) < max(4 * req.se(name), 0.3 * abs(truth))
    assert recovery_fit.click["utility"] > 0
    assert recovery_fit.normalization.request["price"] == pytest.approx(-1.0)


def test_fit_save_load(tmp_path, recovery_table, recovery_fit):
    save_fit(recovery_fit, tmp_path)
    loaded = load_fit(tmp_path)
    np.testing.assert_allclose(loaded.request.coef, recovery_fit.request.coef)
    np.testing.assert_allclose(loaded.click.coef, recovery_fit.click.coef)
    np.testing.assert_allclose(loaded.slot_utilities(recovery_table),
                               recovery_fit.slot_utilities(recovery_table))


def test_slot_utility_modes(small_table, small_fit):
    full = small_fit.slot_utilities(small_table, "full")
    np.testing.assert_allclose(full, small_table.request_design() @ small_fit.request.coef)
    with pytest.raises(UsageError):
        small_fit.slot_utilities(small_table, "median")


def test_column_table():
    fits = {
        1: RequestParams.from_dict({"coefficients": {"price": -0.5}, "standard_errors": {"price": 0.1},
                                    "loglik": -10.0, "loglik0": -20.0}),
        2: RequestParams.from_dict({"coefficients": {"price": -0.4, "tv": 0.2},
                                    "standard_errors": {"price": 0.1, "tv": 0.5},
                                    "loglik": -9.0, "loglik0": -20.0}),
    }
    frame = column_table(fits)
    assert list(frame.columns) == ["(1)", "(2)"]
    assert frame.loc["price", "(1)"].startswith("-0.5***")
    assert frame.loc["tv", "(1)"] == ""
    assert frame.loc["pseudo_r2", "(1)"] == "0.5000"
    assert isinstance(frame, pd.DataFrame)


@pytest.fixture(scope="module")
def click_market():
    cfg = LabConfig.defaults().with_overrides({
        "market.n_users": "600",
        "market.n_rooms": "2000",
        "market.searches_per_user_mean": "10",
        "market.true_request.price": "-0.01",
        "market.true_request.balcony": "1.0",
        "market.true_click.utility": "1.0",
    })
    ds = generate_dataset(cfg.market)
    return ds, SlotTable.from_dataset(ds)


def test_click_parameter_recovery(click_market):
    ds, table = click_market
    beta_r = coefficient_vector(ds.meta.true_params["request"], REQUEST_NAMES)
    click = fit_click_model(table, expected_request_utility(table, ds.listings, beta_r))
    for name, truth in ds.meta.true_params["click"].items():
        assert abs(click[name] - truth) < max(4 * click.se(name), 0.3 * abs(truth)), name
    assert click.converged
    assert click.loglik > click.loglik0


def test_converged_flag_roundtrip():
    p = ClickParams.from_dict({"coefficients": {"position": -0.1}, "converged": False})
    assert not p.converged
    assert not ClickParams.from_dict(p.to_dict()).converged
    assert ClickParams.from_dict({"coefficients": {"position": -0.1}}).converged
