from .base import Optimizer
from .quasi_newton import BFGS
