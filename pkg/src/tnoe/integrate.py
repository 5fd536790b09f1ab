"""Fixed-step integrators over flat amplitude vectors.

Every right-hand side has the signature ``rhs(x, y) -> dy/dx`` on a flat
numpy vector.  A :class:`Layout` converts between the flat vector and the named
amplitude blocks, and is also used to name the offending block when a step
produces non-finite values.
"""

from dataclasses import dataclass
import math

import numpy as np

from .constants import KB_CM_PER_K
from .errors import NonPositiveTemperature, StepUnstable


@dataclass(frozen=True)
class Layout:
    names: tuple
    shapes: tuple
    dtype: type = float

    @classmethod
    def of(cls, blocks, dtype=None):
        names = tuple(blocks)
        shapes = tuple(np.shape(blocks[n]) for n in names)
        if dtype is None:
            dtype = complex if any(np.iscomplexobj(blocks[n]) for n in names) else float
        return cls(names, shapes, dtype)

    @property
    def sizes(self):
        return tuple(int(np.prod(s)) for s in self.shapes)

    @property
    def size(self):
        return sum(self.sizes)

    def flatten(self, blocks):
        out = np.empty(self.size, dtype=self.dtype)
        pos = 0
        for name, n in zip(self.names, self.sizes):
            out[pos:pos + n] = np.ravel(blocks[name])
            pos += n
        return out

    def unflatten(self, y):
        blocks = {}
        pos = 0
        for name, shape, n in zip(self.names, self.shapes, self.sizes):
            chunk = y[pos:pos + n]
            blocks[name] = chunk[0] if shape == () else chunk.reshape(shape)
            pos += n
        return blocks

    def bad_block(self, y):
        """Name of the first block holding a non-finite value, or None."""
        pos = 0
        for name, n in zip(self.names, self.sizes):
            if not np.all(np.isfinite(y[pos:pos + n])):
                return name
            pos += n
        return None


@dataclass
class FlowState:
    x: float
    y: np.ndarray
    layout: Layout

    @property
    def blocks(self):
        return self.layout.unflatten(self.y)


def _check(y, layout, x, what):
    if np.all(np.isfinite(y)):
        return
    block = layout.bad_block(y) if layout is not None else None
    where = f" in block {block!r}" if block else ""
    raise StepUnstable(f"non-finite {what}{where} at x={x:.6g}; reduce the step size", block=block, x=x)


def step_euler(y, x, dx, rhs, layout=None):
    k = rhs(x, y)
    _check(k, layout, x, "derivative")
    return y + dx * k


def step_rk4(y, x, dx, rhs, layout=None):
    """Classical four-stage Runge-Kutta step."""
    k1 = rhs(x, y)
    _check(k1, layout, x, "derivative")
    h2 = 0.5 * dx
    k2 = rhs(x + h2, y + h2 * k1)
    k3 = rhs(x + h2, y + h2 * k2)
    k4 = rhs(x + dx, y + dx * k3)
    out = y + (dx / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    _check(out, layout, x + dx, "amplitude")
    return out


def step_leapfrog(y_prev, y_curr, x, dx, rhs, layout=None):
    """y(x+dx) = y(x-dx) + 2 dx y'(x)."""
    k = rhs(x, y_curr)
    _check(k, layout, x, "derivative")
    return y_prev + 2.0 * dx * k


def step_leapfrog_temperature(y_prev, y_curr, tau_prev, tau_curr, tau_next, residual, layout=None):
    """Leap-frog step in temperature for dS/dtau = R(S) / (k_B tau^2).

    ``residual(beta, y)`` returns R = -dS/dbeta.  The 1/tau^2 factor is
    integrated exactly across [tau_prev, tau_next] with R frozen at tau_curr.
    """
    if min(tau_prev, tau_curr, tau_next) <= 0.0:
        raise NonPositiveTemperature("leap-frog in temperature needs tau > 0; start from a small finite T")
    if not (tau_prev < tau_curr < tau_next or tau_prev > tau_curr > tau_next):
        raise ValueError("temperatures must be strictly ordered")
    r = residual(1.0 / (KB_CM_PER_K * tau_curr), y_curr)
    _check(r, layout, tau_curr, "residual")
    return y_prev - (1.0 / (KB_CM_PER_K * tau_next) - 1.0 / (KB_CM_PER_K * tau_prev)) * r


def integrate(rhs, y0, x0, dx, n_steps, method="rk4", layout=None, callback=None):
    """Run ``n_steps`` fixed steps and return (xs, ys) including the start.

    Leap-frog is bootstrapped with one forward-Euler step.  ``callback(x, y)``
    is invoked after every accepted step and may raise to abort.
    """
    xs = np.empty(n_steps + 1)
    ys = np.empty((n_steps + 1, len(y0)), dtype=np.result_type(y0, float))
    xs[0] = x0
    ys[0] = y0
    y = np.array(y0, copy=True)
    y_prev = None
    for k in range(n_steps):
        x = x0 + k * dx
        if method == "rk4":
            y_new = step_rk4(y, x, dx, rhs, layout)
        elif method == "euler":
            y_new = step_euler(y, x, dx, rhs, layout)
        elif method == "leapfrog":
            y_new = step_euler(y, x, dx, rhs, layout) if y_prev is None else step_leapfrog(y_prev, y, x, dx, rhs, layout)
        else:
            raise ValueError(f"unknown integrator {method!r}")
        _check(y_new, layout, x + dx, "amplitude")
        y_prev, y = y, y_new
        xs[k + 1] = x0 + (k + 1) * dx
        ys[k + 1] = y
        if callback is not None:
            callback(xs[k + 1], y)
    return xs, ys


def n_steps_for(span, dx):
    """Number of fixed steps of nominal size ``dx`` covering ``span`` exactly."""
    return max(1, int(math.ceil(abs(span) / abs(dx) - 1e-9)))


INTEGRATORS = ("rk4", "leapfrog", "euler")


def derivative_5pt(y, dx):
    """Fourth-order centred first derivative on a uniform grid (interior points 2..n-3)."""
    y = np.asarray(y)
    if len(y) < 5:
        raise ValueError("need at least five samples")
    return (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * dx)
