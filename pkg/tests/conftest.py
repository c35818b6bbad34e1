import datetime as dt

import numpy as np
import pytest

from ranklab.data import LabConfig
from ranklab.domain import AMENITIES, Dataset, DatasetMeta, Listing, SearchLog, SearchResultSlot, SlotTable, UserProfile
from ranklab.estimate import true_fit
from ranklab.synth import generate_dataset


def make_listing(room_id, price=400.0, amenities=(), district="eixample", published=dt.date(2018, 1, 1),
                 registered=False, **kw):
    return Listing(
        room_id=room_id,
        price=price,
        n_tenants=kw.pop("n_tenants", 2),
        first_published=published,
        registered_landlord=registered,
        amenities=tuple(a in amenities for a in AMENITIES),
        district=district,
        **kw,
    )


def make_search(search_id, user_id, rooms, clicked=(), requested=(), when=dt.datetime(2018, 2, 1, 12)):
    slots = tuple(
        SearchResultSlot(r, p + 1, r in clicked, r in requested) for p, r in enumerate(rooms)
    )
    return SearchLog(search_id, user_id, when, slots)


@pytest.fixture
def tiny_dataset():
    users = (
        UserProfile("u1", 25, True, True, False),
        UserProfile("u2", 31, False, False, True),
        UserProfile("u3", 40, True, False, True),
    )
    listings = (
        make_listing("rA", 350.0, ("balcony",), "eixample"),
        make_listing("rB", 420.0, ("balcony", "tv"), "north", registered=True),
        make_listing("rC", 500.0, ("tv",), "north", pref_gender="female"),
        make_listing("rD", 300.0, ("balcony",), "sarria_gracia", n_tenants=None),
        make_listing("rE", 450.0, (), "eixample", pref_min_age=18, pref_max_age=30),
        make_listing("rF", 380.0, ("balcony", "heating"), "eixample"),
    )
    searches = (
        make_search("s1", "u1", ("rA", "rB", "rC", "rD"), clicked=("rA", "rC"), requested=("rC",)),
        make_search("s2", "u2", ("rB", "rE", "rF"), clicked=("rE",), requested=()),
        make_search("s3", "u3", ("rF", "rA", "rD", "rB"), clicked=("rF", "rD", "rB"), requested=("rF", "rB")),
    )
    return Dataset(users, listings, searches, DatasetMeta(page_capacity=20))


@pytest.fixture
def tiny_table(tiny_dataset):
    return SlotTable.from_dataset(tiny_dataset)


@pytest.fixture(scope="session")
def small_config():
    return LabConfig.defaults().with_overrides({
        "market.n_users": "40",
        "market.n_rooms": "300",
        "market.searches_per_user_mean": "6",
        "market.click_rate": "0.15",
        "market.request_rate": "0.4",
        "market.true_request.price": "-0.006",
        "market.true_request.balcony": "0.8",
        "market.true_request.tv": "0.5",
        "market.true_click.utility": "1.0",
        "counterfact.seeds_per_alpha": "2",
    })


@pytest.fixture(scope="session")
def small_dataset(small_config):
    return generate_dataset(small_config.market)


@pytest.fixture(scope="session")
def small_table(small_dataset):
    return SlotTable.from_dataset(small_dataset)


@pytest.fixture(scope="session")
def small_fit(small_table, small_dataset):
    return true_fit(small_table, small_dataset.meta.true_params)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
