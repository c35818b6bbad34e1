__version__ = "0.1.0"

# 1. Shared internals first; every subpackage imports from these
from .src import errors
from .src.errors import RanklabError
from .src._typing import ModelFit
from .backend import set_threads, get_threads

# 2. Data model and configuration
from .domain import Dataset, SlotTable, validate
from .data import LabConfig, load_config, load_dataset, save_dataset, preset

# 3. Pipeline stages
from .synth import generate_dataset
from .estimate import PooledFit, fit_pipeline, load_fit, save_fit
from .counterfact import RankingPolicy, simulate_counterfactual
from .metrics import lorenz_curve, gini, frontier_sweep
from . import cluster
