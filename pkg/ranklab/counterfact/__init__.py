from .policy import (
    RankingPolicy, rerank, blend_order, blend_ranks, preference_ranks, random_ranks,
    STATUS_QUO, PERSONALIZED, RANDOM, BLEND, VARIANTS,
)
from .predict import predict_choices, garble_rooms, room_universe, GARBLE_UNIVERSES
from .simulate import CounterfactualLog, simulate_counterfactual, read_counterfactual, CF_FILE, EVENTS
