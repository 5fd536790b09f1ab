import math

import numpy as np
import pytest

from tnoe.constants import KB_CM_PER_K
from tnoe.errors import NonPositiveTemperature, StepUnstable
from tnoe.integrate import (Layout, derivative_5pt, integrate, n_steps_for, step_leapfrog_temperature,
                            step_rk4)


def decay(_, y):
    return -y


def rk4_error(h, x_end=1.0):
    n = n_steps_for(x_end, h)
    _, ys = integrate(decay, np.array([1.0]), 0.0, x_end / n, n)
    return abs(ys[-1, 0] - math.exp(-x_end))


def test_rk4_step_halving_ratio():
    ratio = rk4_error(0.1) / rk4_error(0.05)
    assert 12.0 <= ratio <= 20.0


def test_leapfrog_is_second_order_and_close_to_rk4():
    def osc(_, y):
        return np.array([y[1], -y[0]])

    y0 = np.array([1.0, 0.0])
    errs = []
    for n in (200, 400):
        _, ys = integrate(osc, y0, 0.0, 2.0 / n, n, method="leapfrog")
        errs.append(abs(ys[-1, 0] - math.cos(2.0)))
    assert 3.0 < errs[0] / errs[1] < 5.0
    _, rk = integrate(osc, y0, 0.0, 2.0 / 400, 400)
    assert abs(rk[-1, 0] - math.cos(2.0)) < 1e-10
    assert errs[1] < 1e-4


def test_layout_round_trip_and_bad_block():
    lay = Layout.of({"a": 1.0, "b": np.zeros((2, 2)), "c": np.zeros(3)})
    y = np.arange(lay.size, dtype=float)
    back = lay.flatten(lay.unflatten(y))
    assert np.array_equal(back, y)
    y[3] = np.nan
    assert lay.bad_block(y) == "b"


def test_step_unstable_names_block():
    lay = Layout(("x", "y"), ((), (2,)))

    def rhs(_, y):
        out = np.zeros_like(y)
        out[2] = np.inf
        return out

    with pytest.raises(StepUnstable) as exc:
        step_rk4(np.zeros(3), 0.0, 0.1, rhs, lay)
    assert exc.value.block == "y"


def test_temperature_leapfrog_reproduces_linear_decay():
    # dn/dbeta = -w n  ->  n = exp(-w beta); residual is w n
    w = 300.0
    T = np.linspace(60.0, 500.0, 20001)
    beta = 1.0 / (KB_CM_PER_K * T)
    n = np.empty(len(T))
    n[0] = math.exp(-w * beta[0])
    n[1] = math.exp(-w * beta[1])
    for k in range(1, len(T) - 1):
        n[k + 1] = step_leapfrog_temperature(np.array([n[k - 1]]), np.array([n[k]]), T[k - 1], T[k], T[k + 1],
                                             lambda b, y: w * y)[0]
    assert np.max(np.abs(n - np.exp(-w * beta))) < 1e-6


def test_temperature_leapfrog_rejects_zero():
    with pytest.raises(NonPositiveTemperature):
        step_leapfrog_temperature(np.zeros(1), np.zeros(1), 0.0, 1.0, 2.0, lambda b, y: y)


def test_integrate_unknown_method():
    with pytest.raises(ValueError):
        integrate(decay, np.ones(1), 0.0, 0.1, 2, method="magic")


def test_derivative_5pt_is_fourth_order():
    x = np.linspace(0.0, 1.0, 101)
    d = derivative_5pt(np.sin(x), x[1] - x[0])
    assert np.max(np.abs(d - np.cos(x[2:-2]))) < 1e-8


def test_n_steps_for_exact_cover():
    assert n_steps_for(1.0, 0.1) == 10
    assert n_steps_for(-1.0, 0.3) == 4
