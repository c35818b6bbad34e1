from typing import Callable, Dict, List

from ..src.errors import ConfigError
from .config import LabConfig

__all__ = ["preset", "available_presets", "PRESETS"]


def _small() -> LabConfig:
    """About 1,500 searches with clicks and requests dense enough to estimate."""
    return LabConfig.defaults().with_overrides({
        "market.n_users": "150",
        "market.n_rooms": "1000",
        "market.searches_per_user_mean": "10",
        "market.click_rate": "0.2",
        "market.request_rate": "0.5",
        "market.true_request.price": "-0.01",
        "market.true_request.balcony": "1.0",
        "market.true_request.tv": "0.6",
        "market.true_click.utility": "1.0",
        "counterfact.seeds_per_alpha": "3",
    })


def _desk() -> LabConfig:
    """About 50,000 searches: the parameter-recovery scale."""
    return LabConfig.defaults().with_overrides({
        "market.n_users": "2500",
        "market.n_rooms": "5000",
        "market.searches_per_user_mean": "20",
    })


def _vertical() -> LabConfig:
    """Users agree on which rooms are good, and search overlapping room sets."""
    return LabConfig.defaults().with_overrides({
        "market.n_users": "200",
        "market.n_rooms": "400",
        "market.searches_per_user_mean": "10",
        "market.click_rate": "0.1",
        "market.request_rate": "0.3",
        "market.true_request.price": "-0.008",
        "market.true_request.gender_match": "0.1",
        "market.true_request.balcony": "1.0",
        "market.true_request.terrace": "0.8",
        "market.true_request.elevator": "0.6",
        "market.true_click.utility": "1.0",
    })


PRESETS: Dict[str, Callable[[], LabConfig]] = {
    "small": _small,
    "desk": _desk,
    "vertical": _vertical,
}


def available_presets() -> List[str]:
    return sorted(PRESETS)


def preset(name: str) -> LabConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset '{name}'; choose from {available_presets()}") from None
