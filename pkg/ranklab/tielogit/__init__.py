from .instance import (
    ChoiceInstance, tie_prob, ordered_tie_prob, signed_tie_prob, mc_tie_prob, subset_matrix,
    DEFAULT_EXACT_CAP,
)
from .likelihood import (
    STAGES, ChoiceData, InstanceGroup, log_likelihood, grad_log_likelihood, value_and_grad,
    dump_instance_logprobs,
)
