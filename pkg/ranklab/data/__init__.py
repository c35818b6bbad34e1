from .base import ArrayLoader
from .config import (
    LabConfig, MarketConfig, EstimationConfig, CounterfactualConfig, ClusterConfig,
    load_config, parse_config_text, dump_config, validate_market_config,
)
from .dataset_base import dataset, load_dataset, save_dataset
from .datasets import preset, available_presets
