from .market import generate_market, generate_users, generate_listings
from .ranking import StatusQuoTiebreak, status_quo_rank, status_quo_order, recency_tier
from .behavior import (
    SimulatedLogs, simulate_behavior, generate_dataset, expected_request_utility,
    click_propensity, coefficient_vector,
)
