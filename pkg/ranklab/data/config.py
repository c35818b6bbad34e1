"""Flat `key=value` configuration.

Keys are dotted: `<section>.<field>` or, for mapping-valued fields,
`<section>.<field>.<name>`. Sections map onto the frozen dataclasses below;
`LabConfig.defaults()` is what `ranklab --print-config` prints.
"""

from __future__ import annotations

import collections.abc
import datetime as dt
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from types import MappingProxyType
from typing import Any, Dict, List, Mapping, Tuple, get_type_hints

from ..src.errors import ConfigError, DataIOError
from ..domain.types import AMENITIES, CLICK_NAMES, DISTRICTS, REQUEST_NAMES


def _frozen(d: Mapping[str, float]) -> Mapping[str, float]:
    return MappingProxyType(dict(d))


def _mapping(**kw):
    return field(default_factory=lambda: _frozen(kw))


@dataclass(frozen=True)
class MarketConfig:
    """Synthetic market and behaviour generator settings.

    Frequencies default to the sample shares of the room-rental data the
    model was built for; the true parameters are the recovery targets.
    """

    n_users: int = 300
    n_rooms: int = 3000
    searches_per_user_mean: float = 20.0
    results_per_search_mean: float = 12.0
    page_capacity: int = 20
    seed: int = 7

    start_date: dt.date = dt.date(2018, 1, 1)
    span_days: int = 60
    days_published_mean: float = 100.0

    # users
    age_mean: float = 29.4
    age_sd: float = 5.0
    female_share: float = 0.514
    student_share: float = 0.346
    worker_share: float = 0.81

    # rooms
    price_mean: float = 400.0
    price_sd: float = 103.0
    missing_tenants_share: float = 0.132
    tenants_mean: float = 1.9
    registered_share: float = 0.3
    amenity: Mapping[str, float] = _mapping(
        ac=0.241, balcony=0.417, dishwasher=0.187, doorman=0.142, elevator=0.653,
        exterior_view=0.492, heating=0.470, smoker_friendly=0.278, tv=0.614, terrace=0.214,
    )
    district: Mapping[str, float] = _mapping(
        sarria_gracia=0.130, ciutat_vella_sant_marti=0.198, eixample=0.263,
        north=0.124, sants_les_corts=0.160, greater_barcelona=0.125,
    )
    price_district_shift: Mapping[str, float] = _mapping()
    pref_age_share: float = 0.8027
    pref_min_age_low: int = 18
    pref_min_age_high: int = 23
    pref_age_width_low: int = 10
    pref_age_width_high: int = 21
    pref_female_share: float = 0.2313
    pref_male_share: float = 0.0407
    pref_no_students_share: float = 0.227
    pref_students_only_share: float = 0.027

    # platform ranking
    recency_tier_days: Tuple[int, ...] = (7, 30)
    tiebreak_epochs: int = 1
    popularity_skew: float = 0.0

    # behaviour
    click_rate: float = 0.043
    request_rate: float = 0.095
    true_request: Mapping[str, float] = _mapping(
        price=-0.001, days_since_published=-0.0002, gender_match=0.5, balcony=0.1,
    )
    true_click: Mapping[str, float] = _mapping(
        position=-0.07, position_sq=0.001, pos1=0.1, utility=0.3, position_x_utility=0.03,
    )


@dataclass(frozen=True)
class EstimationConfig:
    gtol: float = 1e-6
    ftol: float = 1e-10
    max_iter: int = 500
    exact_cap: int = 20
    partition_size: int = 2048
    hessian_step: float = 1e-5
    projection_regressors: Tuple[str, ...] = ("x1", "pos", "pos_sq", "x1_pos", "z", "z_pos")
    winsor_percentile: float = 99.0
    min_requests: int = 0
    debug_dump: str = ""


@dataclass(frozen=True)
class CounterfactualConfig:
    seed: int = 11
    utility: str = "expected"
    garble_universe: str = "listings"
    alphas: Tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    seeds_per_alpha: int = 10


@dataclass(frozen=True)
class ClusterConfig:
    k: int = 3
    seed: int = 5
    max_iters: int = 100
    min_search_size: int = 2


@dataclass(frozen=True)
class LabConfig:
    market: MarketConfig = field(default_factory=MarketConfig)
    estimate: EstimationConfig = field(default_factory=EstimationConfig)
    counterfact: CounterfactualConfig = field(default_factory=CounterfactualConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)

    @classmethod
    def defaults(cls) -> "LabConfig":
        return cls()

    def with_overrides(self, pairs: Mapping[str, str]) -> "LabConfig":
        return _apply(self, pairs)

    def to_lines(self) -> List[str]:
        return dump_config(self)


# ---------------------------------------------------------------------------
# parsing


def _coerce(raw: str, typ: Any, key: str) -> Any:
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw
        if typ is dt.date:
            return dt.date.fromisoformat(raw)
        origin = getattr(typ, "__origin__", None)
        if origin is tuple:
            (inner, *_) = typ.__args__
            parts = [p for p in raw.split(",") if p.strip()]
            return tuple(_coerce(p, inner, key) for p in parts)
    except ValueError:
        raise ConfigError(f"invalid value for '{key}': '{raw}'")
    raise ConfigError(f"unsupported type for '{key}'")


def _is_mapping(typ: Any) -> bool:
    return getattr(typ, "__origin__", None) in (Mapping, collections.abc.Mapping, dict)


def _section_types(section: Any) -> Dict[str, Any]:
    return get_type_hints(type(section))


def _apply(cfg: LabConfig, pairs: Mapping[str, str]) -> LabConfig:
    updates: Dict[str, Dict[str, Any]] = {}
    for key, raw in pairs.items():
        parts = key.strip().split(".")
        if len(parts) not in (2, 3) or parts[0] not in {f.name for f in fields(cfg)}:
            raise ConfigError(f"unknown config key '{key}'")
        section_name, name = parts[0], parts[1]
        section = getattr(cfg, section_name)
        hints = _section_types(section)
        if name not in hints:
            raise ConfigError(f"unknown config key '{key}'")
        typ = hints[name]
        sec_updates = updates.setdefault(section_name, {})

        if len(parts) == 3:
            if not _is_mapping(typ):
                raise ConfigError(f"'{section_name}.{name}' is not a mapping")
            current = dict(sec_updates.get(name, getattr(section, name)))
            current[parts[2]] = _coerce(raw, float, key)
            sec_updates[name] = _frozen(current)
        else:
            if _is_mapping(typ):
                raise ConfigError(f"'{key}' needs a name: use '{key}.<name>=value'")
            sec_updates[name] = _coerce(raw, typ, key)

    new = cfg
    for section_name, sec_updates in updates.items():
        new = replace(new, **{section_name: replace(getattr(new, section_name), **sec_updates)})
    return new


def parse_config_text(text: str, base: LabConfig | None = None) -> LabConfig:
    pairs: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got '{line}'")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return _apply(base or LabConfig.defaults(), pairs)


def load_config(path: str | Path | None, base: LabConfig | None = None) -> LabConfig:
    if path is None:
        return base or LabConfig.defaults()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as err:
        raise DataIOError(f"cannot read config '{p}': {err}") from err
    return parse_config_text(text, base)


def _format(value: Any) -> str:
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def dump_config(cfg: LabConfig) -> List[str]:
    lines = []
    for sec in fields(cfg):
        section = getattr(cfg, sec.name)
        for f in fields(section):
            value = getattr(section, f.name)
            if isinstance(value, Mapping):
                for name in sorted(value):
                    lines.append(f"{sec.name}.{f.name}.{name}={_format(value[name])}")
            else:
                lines.append(f"{sec.name}.{f.name}={_format(value)}")
    return lines


def validate_market_config(cfg: MarketConfig) -> None:
    """Raise ConfigError on sizes, frequencies or names outside their domain."""
    for name in ("n_users", "n_rooms", "page_capacity", "span_days"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"market.{name} must be positive")
    for name in ("searches_per_user_mean", "results_per_search_mean", "price_sd", "days_published_mean"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"market.{name} must be positive")
    if cfg.results_per_search_mean > cfg.page_capacity:
        raise ConfigError("market.results_per_search_mean exceeds market.page_capacity")

    shares = {
        name: getattr(cfg, name)
        for name in (
            "female_share", "student_share", "worker_share", "missing_tenants_share",
            "registered_share", "pref_age_share", "pref_female_share", "pref_male_share",
            "pref_no_students_share", "pref_students_only_share", "click_rate", "request_rate",
        )
    }
    shares.update({f"amenity.{k}": v for k, v in cfg.amenity.items()})
    shares.update({f"district.{k}": v for k, v in cfg.district.items()})
    for name, value in shares.items():
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"market.{name}={value} is not a frequency in [0,1]")
    if cfg.pref_female_share + cfg.pref_male_share > 1.0:
        raise ConfigError("gender preference shares sum above 1")
    if cfg.pref_no_students_share + cfg.pref_students_only_share > 1.0:
        raise ConfigError("occupation preference shares sum above 1")

    unknown = set(cfg.amenity) - set(AMENITIES)
    if unknown:
        raise ConfigError(f"unknown amenities {sorted(unknown)}")
    unknown = (set(cfg.district) | set(cfg.price_district_shift)) - set(DISTRICTS)
    if unknown:
        raise ConfigError(f"unknown districts {sorted(unknown)}")
    if sum(cfg.district.values()) <= 0:
        raise ConfigError("district weights sum to zero")
    unknown = set(cfg.true_request) - set(REQUEST_NAMES)
    if unknown:
        raise ConfigError(f"unknown request coefficients {sorted(unknown)}")
    unknown = set(cfg.true_click) - set(CLICK_NAMES)
    if unknown:
        raise ConfigError(f"unknown click coefficients {sorted(unknown)}")
    if list(cfg.recency_tier_days) != sorted(cfg.recency_tier_days):
        raise ConfigError("market.recency_tier_days must be increasing")
    if cfg.tiebreak_epochs < 1:
        raise ConfigError("market.tiebreak_epochs must be >= 1")
