from .congestion import LorenzCurve, lorenz_curve, gini
from .frontier import (
    Frontier, FrontierPoint, frontier_sweep, data_equivalent_alpha, policy_for, RUN_COLUMNS,
)
from .descriptive import (
    PriceCDFs, SummaryReport, avg_request_utility, position_shares, price_cdfs, summary_report,
    appearance_counts, observed_counts, model_fit_lorenz, index_by_position,
)
