from typing import Any, Callable, Dict, Tuple

import numpy as np
from scipy.optimize import OptimizeResult

from ..src._typing import FloatArray

Objective = Callable[[FloatArray], Tuple[float, FloatArray]]


class Optimizer:
    """Base class for the unconstrained minimizers used by the estimators.

    An optimizer owns an objective returning `(value, gradient)` at a flat
    parameter vector and keeps its iteration state on the instance.
    Subclasses implement `update_rule()`, which computes one step from the
    current state and returns the new `(x, value, gradient)`.

    Args:
        objective: Callable mapping a 1-d parameter vector to
            `(value, gradient)`. Minimized.

    Methods:
        get_state():
            Hyperparameters and iteration state, objective excluded.

        load_state(state):
            Restores a state from `get_state()`. Unknown keys are ignored.

        update_rule(**kwargs):
            One step. Must be implemented by subclasses.

        minimize(x0):
            Iterates `update_rule()` from `x0` until the subclass's stopping
            rule fires; returns a `scipy.optimize.OptimizeResult`.
    """

    def __init__(self, objective: Objective):
        self.objective = objective
        self.nfev = 0

    def __repr__(self) -> str:
        state = {k: v for k, v in self.get_state().items() if not isinstance(v, np.ndarray)}
        return f"{self.__class__.__name__}({state})"

    def get_state(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if k != "objective" and not k.startswith("_")}

    def load_state(self, state: Dict[str, Any]):
        for k, v in state.items():
            if hasattr(self, k):
                setattr(self, k, v)

    def evaluate(self, x: FloatArray) -> Tuple[float, FloatArray]:
        self.nfev += 1
        f, g = self.objective(np.asarray(x, dtype=np.float64))
        return float(f), np.asarray(g, dtype=np.float64)

    def update_rule(self, **kwargs):
        raise NotImplementedError

    def minimize(self, x0) -> OptimizeResult:
        raise NotImplementedError
