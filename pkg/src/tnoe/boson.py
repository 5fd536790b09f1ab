"""Thermal propagation for quadratic bosonic Hamiltonians.

Index convention: an upper index belongs to a creation operator and a lower
one to an annihilation operator.  For the amplitudes this gives

    t_up[i]     = t^i    = <a_i>
    t_dn[i]     = t_i    = <a_i^+>
    t_ud[i, j]  = t^i_j  = <a_j^+ a_i> - t^i t_j - f delta_ij
    t_uu[i, j]  = t^ij   = <a_i a_j> - t^i t^j
    t_dd[i, j]  = t_ij   = <a_i^+ a_j^+> - t_i t_j

and the model tensors follow :class:`~tnoe.model.BosonQuadraticModel`
(``h_ud[i, j]`` multiplies a_i^+ a_j).  Amplitudes propagate in beta with
-dt/dbeta given by :func:`residual_boson`; for a quadratic Hamiltonian the
singles and doubles close the algebra.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .constants import KB_CM_PER_K, beta_from_temperature
from . import kernels
from .errors import NonPositiveTemperature, NonPositiveZ, StepUnstable
from .integrate import Layout, integrate, n_steps_for, step_leapfrog_temperature, step_rk4, _check

BLOCKS = ("s0", "t_up", "t_dn", "t_ud", "t_uu", "t_dd")


@dataclass
class ThermalDensitySet:
    """Thermal expectation values at one temperature.

    ``d_up[i] = <a_i>``, ``d_dn[i] = <a_i^+>``, ``d_ud[i, j] = <a_j^+ a_i>``,
    ``d_uu[i, j] = <a_i a_j>`` and ``d_dd[i, j] = <a_i^+ a_j^+>``.
    """

    Z: float
    d_up: np.ndarray
    d_dn: np.ndarray
    d_ud: np.ndarray
    d_uu: np.ndarray
    d_dd: np.ndarray
    lnZ: float = None

    def __post_init__(self):
        if self.lnZ is None:
            if not self.Z > 0.0:
                raise NonPositiveZ(f"partition value must be positive, got {self.Z!r}")
            self.lnZ = math.log(self.Z)


@dataclass
class BosonAmplitudes:
    s0: float
    t_up: np.ndarray
    t_dn: np.ndarray
    t_ud: np.ndarray
    t_uu: np.ndarray
    t_dd: np.ndarray
    beta: float = None

    @property
    def N(self):
        return len(self.t_up)

    def as_dict(self):
        return {name: getattr(self, name) for name in BLOCKS}

    @classmethod
    def zeros(cls, N, s0=0.0, beta=None):
        z1, z2 = np.zeros(N), np.zeros((N, N))
        return cls(s0, z1, z1.copy(), z2, z2.copy(), z2.copy(), beta)


def layout_for(N):
    return Layout(BLOCKS, ((), (N,), (N,), (N, N), (N, N), (N, N)), float)


def residual_boson(model, amps, f=0.0):
    """Right-hand sides -d/dbeta of (s0, t^i, t_i, t^i_j, t^ij, t_ij).

    Returns a :class:`BosonAmplitudes` holding the six residual blocks.
    """
    if f < 0.0:
        raise ValueError("f must be non-negative for bosons")
    fb = 1.0 + f
    hu, hd = model.h_up, model.h_dn
    hud, huu, hdd = model.h_ud, model.h_uu, model.h_dd
    tu, td = np.asarray(amps.t_up), np.asarray(amps.t_dn)
    tud, tuu, tdd = np.asarray(amps.t_ud), np.asarray(amps.t_uu), np.asarray(amps.t_dd)

    r0 = (model.h0_at(f) + np.sum(hud * tud.T) + td @ hud @ tu + hd @ tu + hu @ td
          + 0.5 * (np.sum(hdd * tuu) + tu @ hdd @ tu + np.sum(huu * tdd) + td @ huu @ td))

    r_up = (fb * hu + tud @ hu + fb * (hud @ tu) + tud @ (hud @ tu) + (td @ hud) @ tuu
            + tud @ (huu.T @ td) + (tu @ hdd) @ tuu + hd @ tuu + fb * (huu @ td))

    r_dn = (f * hd + tud.T @ hd + f * (hud.T @ td) + (td @ hud) @ tud + (hud @ tu) @ tdd
            + (td @ huu) @ tdd + (hdd @ tu) @ tud + hu @ tdd + f * (hdd.T @ tu))

    r_ud = (f * fb * hud + f * (tud @ hud) + fb * (hud @ tud) + tud @ hud @ tud
            + tuu @ hud.T @ tdd + fb * (huu.T @ tdd) + tud @ huu @ tdd
            + f * (tuu @ hdd) + tuu.T @ hdd @ tud)

    P = tud @ hud @ tuu + fb * (hud @ tuu) + fb * (tud @ huu)
    r_uu = tud @ huu @ tud.T + tuu.T @ hdd @ tuu + P + P.T + fb * fb * huu

    Q = tud.T @ hud.T @ tdd + f * (hud.T @ tdd) + f * (hdd.T @ tud)
    r_dd = Q + Q.T + tdd @ huu @ tdd + tud.T @ hdd @ tud + f * f * hdd

    return BosonAmplitudes(float(r0), r_up, r_dn, r_ud, r_uu, r_dd, amps.beta)


def init_from_states(densities, f=0.0, beta=None):
    """Amplitudes reproducing the given thermal densities for contraction ``f``."""
    if not densities.Z > 0.0 or not np.isfinite(densities.lnZ):
        raise NonPositiveZ(f"partition value must be positive, got {densities.Z!r}")
    tu = np.array(densities.d_up, dtype=float)
    td = np.array(densities.d_dn, dtype=float)
    N = len(tu)
    return BosonAmplitudes(
        s0=float(densities.lnZ),
        t_up=tu,
        t_dn=td,
        t_ud=np.asarray(densities.d_ud, dtype=float) - np.outer(tu, td) - f * np.eye(N),
        t_uu=np.asarray(densities.d_uu, dtype=float) - np.outer(tu, tu),
        t_dd=np.asarray(densities.d_dd, dtype=float) - np.outer(td, td),
        beta=beta,
    )


def amplitudes_to_densities(amps, f=0.0):
    tu, td = np.asarray(amps.t_up), np.asarray(amps.t_dn)
    N = len(tu)
    return ThermalDensitySet(
        Z=math.exp(amps.s0) if amps.s0 < 709.0 else math.inf,
        lnZ=float(amps.s0),
        d_up=tu.copy(),
        d_dn=td.copy(),
        d_ud=np.asarray(amps.t_ud) + np.outer(tu, td) + f * np.eye(N),
        d_uu=np.asarray(amps.t_uu) + np.outer(tu, tu),
        d_dd=np.asarray(amps.t_dd) + np.outer(td, td),
    )


def vacuum_amplitudes(model, beta, f=0.0):
    """Amplitudes of the pure ground state reached as T -> 0 (undisplaced, uncoupled)."""
    amps = BosonAmplitudes.zeros(model.N, s0=-beta * model.h0, beta=beta)
    amps.t_ud = -f * np.eye(model.N)
    return amps


@dataclass
class BosonTrajectory:
    """Amplitudes sampled along the flow, ordered by increasing temperature."""

    beta: np.ndarray
    s0: np.ndarray
    t_up: np.ndarray
    t_dn: np.ndarray
    t_ud: np.ndarray
    t_uu: np.ndarray
    t_dd: np.ndarray
    U: np.ndarray
    f: float = 0.0
    T: np.ndarray = None
    lnZ: np.ndarray = None
    Z: np.ndarray = None
    A: np.ndarray = None
    S: np.ndarray = None
    Cv: np.ndarray = None
    n: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.beta)

    def amplitudes(self, k):
        return BosonAmplitudes(float(self.s0[k]), self.t_up[k], self.t_dn[k], self.t_ud[k],
                               self.t_uu[k], self.t_dd[k], float(self.beta[k]))

    def densities(self, k):
        return amplitudes_to_densities(self.amplitudes(k), self.f)


def _flow(model, f):
    layout = layout_for(model.N)

    def rhs(beta, y):
        b = layout.unflatten(y)
        amps = BosonAmplitudes(b["s0"], b["t_up"], b["t_dn"], b["t_ud"], b["t_uu"], b["t_dd"], beta)
        r = residual_boson(model, amps, f)
        return -layout.flatten(r.as_dict())

    return rhs, layout


def default_dbeta(model):
    """Step of 2% of the inverse largest normal-mode energy."""
    w = np.max(np.abs(np.linalg.eigvals(np.asarray(model.h_ud) + np.asarray(model.h_uu)))) if model.N else 1.0
    return 0.02 / max(float(w), float(np.max(model.omega)))


def propagate_boson(model, amps0, beta0, beta_end, dbeta=None, integrator="rk4", f=0.0):
    """Integrate from ``beta0`` to ``beta_end`` (normally beta_end < beta0).

    ``integrator`` is ``"rk4"`` (default), ``"leapfrog"`` (in beta) or
    ``"leapfrog-T"`` (uniform temperature grid with the exact 1/tau^2 weight).
    Returns a :class:`BosonTrajectory` with thermodynamics attached.
    """
    if beta0 <= 0 or beta_end <= 0:
        raise NonPositiveTemperature("both end points need a finite temperature")
    rhs, layout = _flow(model, f)
    y0 = layout.flatten(amps0.as_dict())
    bad = layout.bad_block(y0)
    if bad is not None:
        raise StepUnstable(f"non-finite starting amplitude in block {bad!r}", block=bad, x=beta0)
    if dbeta is None:
        dbeta = default_dbeta(model)
    dbeta = abs(float(dbeta))
    if integrator == "rk4":
        xs, ys = _integrate_rk4(model, y0, beta0, beta_end, dbeta, f, layout)
    elif integrator in ("leapfrog", "euler"):
        n = n_steps_for(beta_end - beta0, dbeta)
        xs, ys = integrate(rhs, y0, beta0, (beta_end - beta0) / n, n, method=integrator, layout=layout)
    elif integrator == "leapfrog-T":
        xs, ys = _integrate_temperature(rhs, y0, beta0, beta_end, dbeta, layout)
    else:
        raise ValueError(f"unknown integrator {integrator!r}")
    order = np.argsort(xs)[::-1]
    xs, ys = xs[order], ys[order]
    N = model.N
    K = len(xs)
    # U = -ds0/dbeta at every sample
    U = np.array([-rhs(b, y)[0] for b, y in zip(xs, ys)])
    blocks = [layout.unflatten(y) for y in ys]
    traj = BosonTrajectory(
        beta=xs,
        s0=ys[:, 0].copy(),
        t_up=np.array([b["t_up"] for b in blocks]).reshape(K, N),
        t_dn=np.array([b["t_dn"] for b in blocks]).reshape(K, N),
        t_ud=np.array([b["t_ud"] for b in blocks]).reshape(K, N, N),
        t_uu=np.array([b["t_uu"] for b in blocks]).reshape(K, N, N),
        t_dd=np.array([b["t_dd"] for b in blocks]).reshape(K, N, N),
        U=U, f=f,
        meta={"integrator": integrator, "dbeta": dbeta, "beta0": beta0, "beta_end": beta_end, "f": f},
    )
    return thermo_boson(traj)


def _integrate_rk4(model, y0, beta0, beta_end, dbeta, f, layout):
    n = n_steps_for(beta_end - beta0, dbeta)
    h = (beta_end - beta0) / n
    ys, bad = kernels.boson_rk4(np.array(y0, dtype=float), model.h0_at(f), *kernels.tensor_args(model),
                                float(f), h, n)
    if bad >= 0:
        x = beta0 + bad * h
        raise StepUnstable(f"non-finite amplitude in block {layout.bad_block(ys[bad])!r} at beta={x:.6g}; "
                           "reduce the step size", block=layout.bad_block(ys[bad]), x=x)
    return beta0 + h * np.arange(n + 1), ys


def _integrate_temperature(rhs, y0, beta0, beta_end, dbeta, layout):
    """Leap-frog on a uniform temperature grid, bootstrapped with one RK4 step in beta."""
    T0 = 1.0 / (KB_CM_PER_K * beta0)
    T1 = 1.0 / (KB_CM_PER_K * beta_end)
    # temperature step matching dbeta at the start of the flow
    dT = dbeta * KB_CM_PER_K * T0 * T0
    n = n_steps_for(T1 - T0, dT)
    taus = np.linspace(T0, T1, n + 1)
    betas = 1.0 / (KB_CM_PER_K * taus)
    ys = np.empty((n + 1, len(y0)))
    ys[0] = y0
    ys[1] = step_rk4(y0, betas[0], betas[1] - betas[0], rhs, layout)

    def residual(beta, y):
        return -rhs(beta, y)

    for k in range(1, n):
        ys[k + 1] = step_leapfrog_temperature(ys[k - 1], ys[k], taus[k - 1], taus[k], taus[k + 1], residual, layout)
        _check(ys[k + 1], layout, taus[k + 1], "amplitude")
    return betas, ys


def thermo_boson(traj):
    """Attach T, lnZ, Z, A, S (in units of k_B), Cv = dU/dT and occupations."""
    beta = np.asarray(traj.beta, dtype=float)
    traj.T = 1.0 / (KB_CM_PER_K * beta)
    traj.lnZ = np.asarray(traj.s0, dtype=float)
    with np.errstate(over="ignore"):
        traj.Z = np.exp(traj.lnZ)
    traj.A = -traj.lnZ / beta
    traj.S = beta * traj.U + traj.lnZ
    traj.Cv = np.gradient(traj.U, traj.T) if len(beta) > 2 else np.full(len(beta), np.nan)
    diag = np.diagonal(traj.t_ud, axis1=1, axis2=2)
    traj.n = traj.f + diag + traj.t_up * traj.t_dn
    return traj


def thermal_start(model, T0, n_states=3, f=0.0, reference=None):
    """Amplitudes at ``T0`` from the ``n_states`` lowest eigenstates of the model."""
    from .oracle import boson_sos

    if T0 <= 0:
        raise NonPositiveTemperature("the initial temperature must be positive")
    ref = reference if reference is not None else boson_sos(model, [T0], n_states=n_states)
    beta0 = beta_from_temperature(T0)
    return init_from_states(ref.densities(0), f, beta=beta0), beta0


def run_thermal(model, T0=60.0, T_max=500.0, n_states=3, f=0.0, dbeta=None, integrator="rk4"):
    """Initialize at ``T0`` and propagate to ``T_max``."""
    if T_max <= T0:
        raise ValueError("T_max must exceed T0")
    amps0, beta0 = thermal_start(model, T0, n_states, f)
    traj = propagate_boson(model, amps0, beta0, beta_from_temperature(T_max), dbeta, integrator, f)
    traj.meta.update(T0=T0, T_max=T_max, n_states=n_states)
    return traj
