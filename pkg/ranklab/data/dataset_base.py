import datetime as dt
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List

import numpy as np

from ..domain.types import (
    AMENITIES, Dataset, DatasetMeta, Listing, SearchLog, SearchResultSlot, UserProfile,
)
from ..src.errors import DataIOError
from ..src.logging_utils import get_logger, log

logger = get_logger(__name__)

USERS_FILE = "users.jsonl"
LISTINGS_FILE = "listings.jsonl"
SEARCHES_FILE = "searches.jsonl"
META_FILE = "meta.json"


# ---------------------------------------
# record <-> type

def user_to_record(u: UserProfile) -> Dict[str, Any]:
    return {"user_id": u.user_id, "age": u.age, "female": u.female,
            "student": u.student, "worker": u.worker}


def user_from_record(rec: Dict[str, Any]) -> UserProfile:
    return UserProfile(
        user_id=str(rec["user_id"]), age=int(rec["age"]), female=bool(rec["female"]),
        student=bool(rec["student"]), worker=bool(rec["worker"]),
    )


def listing_to_record(r: Listing) -> Dict[str, Any]:
    return {
        "room_id": r.room_id,
        "price": r.price,
        "n_tenants": r.n_tenants,
        "first_published": r.first_published.isoformat(),
        "registered_landlord": r.registered_landlord,
        "amenities": r.amenity_map(),
        "district": r.district,
        "pref_min_age": r.pref_min_age,
        "pref_max_age": r.pref_max_age,
        "pref_gender": r.pref_gender,
        "pref_occupation": r.pref_occupation,
    }


def _opt_int(value):
    return None if value is None else int(value)


def listing_from_record(rec: Dict[str, Any]) -> Listing:
    amen = rec["amenities"]
    return Listing(
        room_id=str(rec["room_id"]),
        price=float(rec["price"]),
        n_tenants=_opt_int(rec.get("n_tenants")),
        first_published=dt.date.fromisoformat(rec["first_published"]),
        registered_landlord=bool(rec["registered_landlord"]),
        amenities=tuple(bool(amen[a]) for a in AMENITIES),
        district=str(rec["district"]),
        pref_min_age=_opt_int(rec.get("pref_min_age")),
        pref_max_age=_opt_int(rec.get("pref_max_age")),
        pref_gender=rec.get("pref_gender"),
        pref_occupation=rec.get("pref_occupation"),
    )


def search_to_record(s: SearchLog) -> Dict[str, Any]:
    return {
        "search_id": s.search_id,
        "user_id": s.user_id,
        "timestamp": s.timestamp.isoformat(),
        "slots": [
            {"room_id": x.room_id, "position": x.position,
             "clicked": x.clicked, "requested": x.requested}
            for x in s.slots
        ],
    }


def search_from_record(rec: Dict[str, Any]) -> SearchLog:
    return SearchLog(
        search_id=str(rec["search_id"]),
        user_id=str(rec["user_id"]),
        timestamp=dt.datetime.fromisoformat(rec["timestamp"]),
        slots=tuple(
            SearchResultSlot(
                room_id=str(x["room_id"]), position=int(x["position"]),
                clicked=bool(x.get("clicked", False)), requested=bool(x.get("requested", False)),
            )
            for x in rec["slots"]
        ),
    )


def meta_to_record(m: DatasetMeta) -> Dict[str, Any]:
    return {
        "page_capacity": m.page_capacity,
        "winsor_caps": dict(m.winsor_caps),
        "seed": m.seed,
        "true_params": {k: dict(v) for k, v in m.true_params.items()},
        "extra": dict(m.extra),
    }


def meta_from_record(rec: Dict[str, Any]) -> DatasetMeta:
    return DatasetMeta(
        page_capacity=int(rec.get("page_capacity", 20)),
        winsor_caps={k: float(v) for k, v in rec.get("winsor_caps", {}).items()},
        seed=rec.get("seed"),
        true_params={k: {n: float(x) for n, x in v.items()}
                     for k, v in rec.get("true_params", {}).items()},
        extra=dict(rec.get("extra", {})),
    )


# ---------------------------------------
# jsonl

def iter_jsonl(path) -> Iterator[Dict[str, Any]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as err:
                    raise DataIOError(f"{path}:{lineno}: malformed JSON ({err.msg})") from err
    except OSError as err:
        raise DataIOError(f"cannot read '{path}': {err}") from err


def to_json_safe(obj: Any) -> Any:
    """Copy of `obj` with NaN and infinities as None and numpy scalars as Python numbers."""
    if isinstance(obj, dict):
        return {k: to_json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _dumps(obj: Any, **kw) -> str:
    return json.dumps(to_json_safe(obj), sort_keys=True, allow_nan=False, **kw)


def write_jsonl(path, records: Iterable[Dict[str, Any]], header: Dict[str, Any] | None = None) -> int:
    n = 0
    try:
        with open(path, "w", encoding="utf-8") as fh:
            if header is not None:
                fh.write(_dumps(header) + "\n")
            for rec in records:
                fh.write(_dumps(rec) + "\n")
                n += 1
    except OSError as err:
        raise DataIOError(f"cannot write '{path}': {err}") from err
    return n


def write_json(path, obj: Any) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_dumps(obj, indent=2) + "\n")
    except OSError as err:
        raise DataIOError(f"cannot write '{path}': {err}") from err


def read_json(path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as err:
        raise DataIOError(f"cannot read '{path}': {err}") from err
    except json.JSONDecodeError as err:
        raise DataIOError(f"{path}: malformed JSON ({err.msg})") from err


def _parse(records, parse, path):
    out: List = []
    for rec in records:
        try:
            out.append(parse(rec))
        except (KeyError, TypeError, ValueError) as err:
            raise DataIOError(f"{path}: bad record {rec!r:.80} ({err})") from err
    return tuple(out)


# ---------------------------------------
class dataset:
    """A dataset directory: users.jsonl, listings.jsonl, searches.jsonl, meta.json."""

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.is_dir():
            raise DataIOError(f"dataset directory '{self.path}' does not exist")
        for name in (USERS_FILE, LISTINGS_FILE, SEARCHES_FILE):
            if not (self.path / name).exists():
                raise DataIOError(f"dataset directory '{self.path}' has no {name}")

    def __len__(self):
        return sum(1 for _ in iter_jsonl(self.path / SEARCHES_FILE))

    def load_data(self) -> Dataset:
        users = _parse(iter_jsonl(self.path / USERS_FILE), user_from_record, USERS_FILE)
        listings = _parse(iter_jsonl(self.path / LISTINGS_FILE), listing_from_record, LISTINGS_FILE)
        searches = _parse(iter_jsonl(self.path / SEARCHES_FILE), search_from_record, SEARCHES_FILE)
        meta_path = self.path / META_FILE
        meta = meta_from_record(read_json(meta_path)) if meta_path.exists() else DatasetMeta()
        log(logger, 20, "dataset_loaded", path=str(self.path), users=len(users),
            rooms=len(listings), searches=len(searches))
        return Dataset(users=users, listings=listings, searches=searches, meta=meta)


def load_dataset(path) -> Dataset:
    return dataset(path).load_data()


def save_dataset(data: Dataset, path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise DataIOError(f"cannot create '{out}': {err}") from err
    write_jsonl(out / USERS_FILE, (user_to_record(u) for u in data.users))
    write_jsonl(out / LISTINGS_FILE, (listing_to_record(r) for r in data.listings))
    write_jsonl(out / SEARCHES_FILE, (search_to_record(s) for s in data.searches))
    write_json(out / META_FILE, meta_to_record(data.meta))
    log(logger, 20, "dataset_saved", path=str(out), users=len(data.users),
        rooms=len(data.listings), searches=len(data.searches))
    return out
