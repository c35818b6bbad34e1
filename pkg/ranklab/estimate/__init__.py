from .params import FittedChoiceModel, RequestParams, ClickParams, significance_stars
from .projection import (
    ProjectionModel, fit_projection, fit_projection_matrix, regressor_matrix, regressor_names,
    projected_components, REGRESSOR_GROUPS,
)
from .utility import expected_utility, expected_utilities, full_utilities
from .fit import (
    fit_choice_model, fit_request_model, fit_click_model, click_design,
    REQUEST_COLUMNS, CLICK_COLUMNS,
)
from .normalize import EuroReport, normalize_params
from .pipeline import (
    PooledFit, fit_pipeline, fit_columns, column_table, save_fit, load_fit, true_fit, UTILITY_MODES,
)
