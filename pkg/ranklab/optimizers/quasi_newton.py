import warnings
from typing import Dict, Tuple

import numpy as np
from scipy.optimize import OptimizeResult, line_search

from ..src._typing import FloatArray
from ..src.errors import ConvergenceError, NumericalError
from ..src.logging_utils import get_logger, log
from .base import Objective, Optimizer

logger = get_logger(__name__)


class BFGS(Optimizer):
    """Quasi-Newton minimizer with an inverse-Hessian BFGS update.

    Steps satisfy the strong Wolfe conditions (`scipy.optimize.line_search`).
    The first inverse Hessian, and any after a reset, is the identity scaled
    by (y.s)/(y.y) of the first accepted step; updates with y.s <= 0 are
    skipped so the approximation stays positive definite.

    Stops when max|grad| <= gtol or when the relative change in the
    objective falls to ftol. If the line search fails twice in a row (once
    with the current inverse Hessian, once after a reset to steepest
    descent), the run stops with success=False when max|grad| <= stall_gtol
    and raises ConvergenceError otherwise; so does reaching max_iter.

    A trial point where the objective raises NumericalError is scored as +inf,
    so the line search backs off from it. Only the starting point must be
    evaluable.

    Args:
        objective: Callable returning (value, gradient).
        gtol: Gradient max-norm tolerance. Defaults to 1e-6.
        ftol: Relative objective-change tolerance. Defaults to 1e-10.
        max_iter: Iteration cap. Defaults to 500.
        stall_gtol: Gradient max-norm at which a line-search stall returns
            instead of raising.
    """

    def __init__(
        self,
        objective: Objective,
        gtol: float = 1e-6,
        ftol: float = 1e-10,
        max_iter: int = 500,
        stall_gtol: float = 1e-3,
    ):
        super().__init__(objective)
        self.gtol = gtol
        self.ftol = ftol
        self.max_iter = max_iter
        self.stall_gtol = stall_gtol

        self.x = None
        self.f = None
        self.g = None
        self.H = None
        self.nit = 0
        self.scaled = False
        self._cache: Dict[bytes, Tuple[float, FloatArray]] = {}

    # ------------------------------------------------------------------
    def _cached(self, x: FloatArray) -> Tuple[float, FloatArray]:
        key = np.ascontiguousarray(x, dtype=np.float64).tobytes()
        hit = self._cache.get(key)
        if hit is None:
            hit = self.evaluate(x)
            self._cache = {key: hit}
        return hit

    def _trial(self, z: FloatArray) -> Tuple[float, FloatArray]:
        try:
            return self._cached(z)
        except NumericalError as err:
            log(logger, 10, "bfgs_trial_rejected", iteration=self.nit, error=type(err).__name__)
            return np.inf, np.zeros_like(self.g)

    def _search(self, p: FloatArray):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out = line_search(
                lambda z: self._trial(z)[0],
                lambda z: self._trial(z)[1],
                self.x, p, gfk=self.g, old_fval=self.f,
            )
        return out[0]

    def reset(self):
        self.H = np.eye(self.x.size)
        self.scaled = False

    def update_rule(self, **kwargs):
        p = -self.H @ self.g
        alpha = self._search(p)
        if alpha is None:
            log(logger, 10, "bfgs_line_search_reset", iteration=self.nit)
            self.reset()
            p = -self.g
            alpha = self._search(p)
            if alpha is None:
                return None

        s = alpha * p
        x_new = self.x + s
        f_new, g_new = self._trial(x_new)
        if not np.isfinite(f_new):
            return None
        y = g_new - self.g
        ys = float(y @ s)
        if ys > 0.0:
            if not self.scaled:
                self.H = np.eye(self.x.size) * (ys / float(y @ y))
                self.scaled = True
            rho = 1.0 / ys
            hy = self.H @ y
            self.H = (self.H
                      - rho * (np.outer(s, hy) + np.outer(hy, s))
                      + (rho * rho * float(y @ hy) + rho) * np.outer(s, s))
        return x_new, f_new, g_new

    def minimize(self, x0) -> OptimizeResult:
        self.x = np.array(x0, dtype=np.float64)
        self.f, self.g = self._cached(self.x)
        self.reset()
        self.nit = 0
        message = "maximum iterations reached"
        success = False

        while self.nit < self.max_iter:
            gnorm = float(np.max(np.abs(self.g))) if self.g.size else 0.0
            if gnorm <= self.gtol:
                success, message = True, "gradient tolerance reached"
                break

            step = self.update_rule()
            if step is None:
                if gnorm <= self.stall_gtol:
                    message = "line search stalled near optimum"
                    log(logger, 30, "bfgs_stalled", iteration=self.nit, grad_max=gnorm, gtol=self.gtol)
                    return self._result(False, message)
                raise ConvergenceError(
                    f"line search failed at iteration {self.nit} with max|grad|={gnorm:.3g}"
                )

            x_new, f_new, g_new = step
            f_old = self.f
            change = abs(f_old - f_new)
            self.x, self.f, self.g = x_new, f_new, g_new
            self.nit += 1
            log(logger, 10, "bfgs_iteration", iteration=self.nit, value=self.f,
                grad_max=float(np.max(np.abs(self.g))))
            if change <= self.ftol * max(abs(f_old), abs(f_new), 1.0):
                success, message = True, "objective tolerance reached"
                break

        if not success:
            raise ConvergenceError(f"no convergence after {self.max_iter} iterations")

        log(logger, 20, "bfgs_converged", iterations=self.nit, value=self.f, message=message)
        return self._result(success, message)

    def _result(self, success: bool, message: str) -> OptimizeResult:
        return OptimizeResult(
            x=self.x.copy(), fun=self.f, jac=self.g.copy(), hess_inv=self.H.copy(),
            nit=self.nit, nfev=self.nfev, success=success, message=message,
        )
