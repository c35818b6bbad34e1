import logging

import numpy as np
import pytest
from scipy.optimize import rosen, rosen_der

from ranklab.optimizers import BFGS
from ranklab.src.errors import ConvergenceError, PrecisionLossError


def quadratic(a, b):
    def fn(x):
        r = x - b
        return float(r @ a @ r), 2 * a @ r
    return fn


def test_quadratic_minimum():
    a = np.array([[3.0, 0.5], [0.5, 1.0]])
    b = np.array([1.0, -2.0])
    res = BFGS(quadratic(a, b), gtol=1e-9).minimize(np.zeros(2))
    assert res.success
    np.testing.assert_allclose(res.x, b, atol=1e-7)
    np.testing.assert_allclose(res.hess_inv, np.linalg.inv(2 * a), atol=1e-3)


def test_rosenbrock():
    opt = BFGS(lambda x: (rosen(x), rosen_der(x)), gtol=1e-8, ftol=0.0)
    res = opt.minimize(np.array([-1.2, 1.0, 0.5]))
    np.testing.assert_allclose(res.x, np.ones(3), atol=1e-4)
    assert res.nfev == opt.nfev
    assert res.nit > 0


def test_starting_at_optimum():
    res = BFGS(quadratic(np.eye(3), np.ones(3))).minimize(np.ones(3))
    assert res.nit == 0
    assert res.message == "gradient tolerance reached"


def test_iteration_cap():
    opt = BFGS(lambda x: (rosen(x), rosen_der(x)), gtol=1e-12, ftol=0.0, max_iter=2)
    with pytest.raises(ConvergenceError):
        opt.minimize(np.array([-1.2, 1.0]))


def test_state_roundtrip():
    opt = BFGS(quadratic(np.eye(2), np.zeros(2)), gtol=1e-4)
    opt.minimize(np.array([1.0, 1.0]))
    state = opt.get_state()
    assert "objective" not in state and "_cache" not in state
    fresh = BFGS(quadratic(np.eye(2), np.zeros(2)))
    fresh.load_state(state)
    assert fresh.gtol == 1e-4
    np.testing.assert_array_equal(fresh.x, opt.x)
    assert "BFGS(" in repr(fresh)


def test_trial_point_outside_domain():
    a = np.diag([3.0, 1.0])
    b = np.array([3.0, -2.0])
    inner = quadratic(a, b)
    rejected = []

    def fn(x):
        if np.any(np.abs(x) > 4.0):
            rejected.append(x.copy())
            raise PrecisionLossError("outside the evaluable region")
        return inner(x)

    res = BFGS(fn, gtol=1e-9).minimize(np.zeros(2))
    assert res.success
    assert rejected
    np.testing.assert_allclose(res.x, b, atol=1e-7)


def test_start_must_be_evaluable():
    def fn(x):
        raise PrecisionLossError("nowhere evaluable")

    with pytest.raises(PrecisionLossError):
        BFGS(fn).minimize(np.zeros(2))


def flat(grad):
    return lambda x: (0.0, np.full_like(x, grad))


def test_stall_near_optimum_is_not_success(caplog):
    with caplog.at_level(logging.WARNING, logger="ranklab"):
        res = BFGS(flat(1e-4), gtol=1e-8).minimize(np.zeros(2))
    assert not res.success
    assert res.message == "line search stalled near optimum"
    assert "bfgs_stalled" in caplog.text


def test_stall_far_from_optimum():
    with pytest.raises(ConvergenceError):
        BFGS(flat(1e-1), gtol=1e-8).minimize(np.zeros(2))
