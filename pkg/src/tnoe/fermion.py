"""Grand-canonical propagation for one-body fermionic Hamiltonians.

Amplitudes ``s`` parametrise the one-body density matrix through

    D_pq = f_p delta_pq + f_q (1 - f_p) s_pq

and obey -ds/dbeta = R(h, s) - mu R(delta, s), with mu fixed at every stage
evaluation so that Tr D stays equal to the electron count.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DegenerateConstraint, StepUnstable
from .integrate import Layout, integrate, n_steps_for
from .model import ContractionScheme, normal_order_fermion

OCC_TOL = 1e-6


@dataclass
class FermionAmplitudes:
    beta: float
    s0: float
    s: np.ndarray


@dataclass
class ThermalTrajectory:
    """Sampled thermal quantities on an inverse-temperature grid.

    ``lnZ`` is the grand partition function ln Tr exp(-beta (H - mu N)) at the
    chemical potential ``mu`` that fixes the electron count; ``mu_flow`` is the
    instantaneous multiplier used in the amplitude equations.
    """

    beta: np.ndarray
    s0: np.ndarray
    s: np.ndarray
    D: np.ndarray
    mu_flow: np.ndarray
    mu_integral: np.ndarray
    dlnZ: np.ndarray
    n_el: int
    E0: float = 0.0
    T: np.ndarray = None
    lnZ: np.ndarray = None
    U: np.ndarray = None
    mu: np.ndarray = None
    A: np.ndarray = None
    S: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.beta)

    def occupations(self):
        """Natural occupations (eigenvalues of the Hermitian part of D), per sample."""
        Dh = 0.5 * (self.D + np.conj(np.swapaxes(self.D, -1, -2)))
        return np.linalg.eigvalsh(Dh)


def _weights(scheme):
    f = scheme.f
    fb = scheme.fbar
    # t_pq = f_q fbar_p s_pq
    return np.outer(fb, f)


def residual_fermion(h_dot, s, scheme):
    """Residual blocks R(h, s) and R(delta, s) for per-orbital contractions.

    R_h[p,q] = h_pq + sum_r fb_r h_pr s_rq - sum_r f_r s_pr h_rq
               - sum_rs f_r fb_s s_pr h_rs s_sq
    and R_delta is the same expression with h replaced by the identity.
    """
    f = scheme.f
    fb = scheme.fbar
    s = np.asarray(s)
    hs = h_dot @ (fb[:, None] * s)
    sh = (s * f[None, :]) @ h_dot
    shs = (s * f[None, :]) @ (h_dot @ (fb[:, None] * s))
    R_h = h_dot + hs - sh - shs
    R_delta = np.eye(len(f)) + (fb[:, None] - f[None, :]) * s - (s * (f * fb)[None, :]) @ s
    return R_h, R_delta


def chemical_potential(R_h, R_delta, scheme=None):
    """Multiplier that keeps the electron count fixed.

    For uniform f this is Tr R_h / Tr R_delta.  With per-orbital f the
    diagonal is weighted by f_p (1 - f_p), the factor linking s_pp to D_pp.
    """
    if scheme is None or scheme.uniform:
        num = np.trace(R_h)
        den = np.trace(R_delta)
    else:
        w = scheme.f * scheme.fbar
        num = np.dot(w, np.diag(R_h))
        den = np.dot(w, np.diag(R_delta))
    if abs(den) < 1e-14:
        raise DegenerateConstraint(
            "sum of R(delta) diagonal vanished: occupations are pinned at 0 or 1")
    mu = num / den
    return float(mu.real) if abs(mu.imag) < 1e-12 * max(1.0, abs(mu.real)) else complex(mu)


def density_matrix_fermion(s, scheme):
    return np.diag(scheme.f).astype(np.result_type(s, float)) + _weights(scheme) * s


def initial_amplitudes(model, scheme):
    """s at beta = 0: every orbital uniformly filled with n_el / M electrons."""
    nu = model.n_el / model.M
    w = scheme.f * scheme.fbar
    if np.any(w == 0.0):
        raise ValueError("propagation needs 0 < f_p < 1 for every orbital")
    return np.diag((nu - scheme.f) / w).astype(np.result_type(model.h, float))


def _flow(model, scheme, hermitize=False):
    h = np.asarray(model.h)
    h0, h_dot = normal_order_fermion(model, scheme)
    f = scheme.f
    fb = scheme.fbar
    M = model.M
    dtype = np.result_type(h, float)
    layout = Layout(("s0", "I_mu", "s"), ((), (), (M, M)), dtype)
    n_el = model.n_el
    h0_ex = h0 - model.E0

    def rhs(beta, y):
        b = layout.unflatten(y)
        s = b["s"]
        R_h, R_d = residual_fermion(h_dot, s, scheme)
        if hermitize:
            R_h = 0.5 * (R_h + R_h.conj().T)
            R_d = 0.5 * (R_d + R_d.conj().T)
        mu = chemical_potential(R_h, R_d, scheme)
        out = np.empty_like(y)
        # E0 is kept out of s0 so that lnZ = -beta E0 + s0 (+ normalisation)
        ds0 = -(h0_ex + np.sum(h_dot * (f[:, None] * fb[None, :]) * s.T) - mu * n_el)
        out[0] = ds0
        out[1] = mu
        out[2:] = -(R_h - mu * R_d).ravel()
        return out

    return rhs, layout


def propagate_fermion(model, scheme=None, beta_max=20.0, dbeta=0.005, integrator="rk4",
                      hermitize=False, check_bounds=True):
    """Integrate the amplitude equations from beta = 0 to ``beta_max``.

    Returns a :class:`ThermalTrajectory` with thermodynamics attached; the
    beta = 0 point itself is not sampled (mu and A diverge there).
    """
    if scheme is None:
        scheme = ContractionScheme.default_for(model)
    if dbeta <= 0:
        raise ValueError("dbeta must be positive")
    rhs, layout = _flow(model, scheme, hermitize)
    n = n_steps_for(beta_max, dbeta)
    dx = beta_max / n
    s_init = initial_amplitudes(model, scheme)
    y0 = layout.flatten({"s0": 0.0, "I_mu": 0.0, "s": s_init})

    def guard(beta, y):
        if not check_bounds:
            return
        D = density_matrix_fermion(layout.unflatten(y)["s"], scheme)
        occ = np.linalg.eigvalsh(0.5 * (D + D.conj().T))
        if occ[0] < -OCC_TOL or occ[-1] > 1.0 + OCC_TOL:
            raise StepUnstable(
                f"occupation left [0, 1] at beta={beta:.6g} (range {occ[0]:.3g}..{occ[-1]:.3g}); use a smaller dbeta",
                block="s", x=beta)

    xs, ys = integrate(rhs, y0, 0.0, dx, n, method=integrator, layout=layout, callback=guard)
    xs, ys = xs[1:], ys[1:]
    s = ys[:, 2:].reshape(len(xs), model.M, model.M)
    mu_flow = np.empty(len(xs))
    dlnZ = np.empty(len(xs))
    for k, (b, y) in enumerate(zip(xs, ys)):
        d = rhs(b, y)
        mu_flow[k] = np.real(d[1])
        dlnZ[k] = np.real(d[0])
    traj = ThermalTrajectory(
        beta=xs, s0=np.real(ys[:, 0]), s=s, D=density_matrix_fermion(s, scheme),
        mu_flow=mu_flow, mu_integral=np.real(ys[:, 1]), dlnZ=dlnZ, n_el=model.n_el, E0=model.E0,
        meta={"integrator": integrator, "dbeta": dx, "f": scheme.f.tolist(), "hermitize": hermitize})
    return thermodynamics_fermion(traj, model)


def thermodynamics_fermion(traj, model):
    """Attach T, lnZ, U, mu, A and S (entropy in units of k_B; k_B = 1 here).

    The flow starts from the uniformly filled product density with trace one,
    so s0 = ln Tr exp(-beta (H - mu_bar N)) + M ln(1 - n_el/M) with
    mu_bar the beta-average of the flow multiplier.  Converting the average to
    the equilibrium chemical potential gives the grand partition function.
    """
    beta = np.asarray(traj.beta, dtype=float)
    M = model.M
    nu = model.n_el / M
    lam = math.log(nu / (1.0 - nu))
    traj.T = 1.0 / beta
    traj.mu = (traj.mu_integral + lam) / beta
    traj.lnZ = -beta * model.E0 + traj.s0 - M * math.log(1.0 - nu)
    h = np.asarray(model.h)
    traj.U = model.E0 + np.real(np.einsum("pq,kqp->k", h, traj.D))
    traj.A = -traj.lnZ / beta
    traj.S = beta * (traj.U - traj.A - traj.mu * model.n_el)
    return traj


def cc_limit_check(model, occupied=None, t=None, mus=(-10.0, 0.0, 10.0), rng=None):
    """Compare the per-orbital residual at extremal f with the one-body CC residual.

    With f = 1 on ``occupied`` orbitals and 0 elsewhere only the excitation
    block t[a, i] survives; the general residual scaled by f_q (1 - f_p) must
    equal h_ai + h_ac t_ci - t_ak h_ki - t_ak h_kc t_ci for every mu.
    """
    M = model.M
    if occupied is None:
        occupied = range(model.n_el)
    occ = np.array(sorted(occupied))
    vir = np.array([p for p in range(M) if p not in set(occ)])
    scheme = ContractionScheme.extremal(M, occ)
    h0, h = normal_order_fermion(model, scheme)
    h = np.asarray(h)
    if t is None:
        rng = np.random.default_rng(rng)
        t = 0.1 * rng.standard_normal((len(vir), len(occ)))
    s = np.zeros((M, M), dtype=np.result_type(h, t))
    s[np.ix_(vir, occ)] = t
    w = _weights(scheme)

    h_vo = h[np.ix_(vir, occ)]
    h_vv = h[np.ix_(vir, vir)]
    h_oo = h[np.ix_(occ, occ)]
    h_ov = h[np.ix_(occ, vir)]
    cc = h_vo + h_vv @ t - t @ h_oo - t @ h_ov @ t

    R_h, R_d = residual_fermion(h, s, scheme)
    deviations = []
    residuals = []
    for mu in mus:
        general = w * (R_h - mu * R_d)
        dev = np.max(np.abs(general[np.ix_(vir, occ)] - cc))
        mask = np.ones((M, M), dtype=bool)
        mask[np.ix_(vir, occ)] = False
        dev = max(dev, np.max(np.abs(general[mask]), initial=0.0))
        deviations.append(float(dev))
        residuals.append(general[np.ix_(vir, occ)])
    mu_spread = max(float(np.max(np.abs(r - residuals[0]))) for r in residuals)
    energy = h0 + float(np.real(np.sum(h_ov * t.T)))
    return {
        "max_deviation": max(deviations),
        "mu_spread": mu_spread,
        "deviations": deviations,
        "energy": energy,
        "h0": h0,
        "occupied": occ.tolist(),
    }


def solve_cc_fixed_point(model, occupied=None, dbeta=0.01, beta_max=50.0):
    """Propagate dt/dbeta = -CC(t) from t = 0; returns (t, energy)."""
    M = model.M
    if occupied is None:
        occupied = range(model.n_el)
    occ = np.array(sorted(occupied))
    vir = np.array([p for p in range(M) if p not in set(occ)])
    h = np.asarray(model.h)
    h0 = model.E0 + float(np.real(np.sum(np.diag(h)[occ])))
    h_vo, h_vv = h[np.ix_(vir, occ)], h[np.ix_(vir, vir)]
    h_oo, h_ov = h[np.ix_(occ, occ)], h[np.ix_(occ, vir)]
    shape = (len(vir), len(occ))
    dtype = np.result_type(h, float)

    def rhs(_, y):
        t = y.reshape(shape)
        return -(h_vo + h_vv @ t - t @ h_oo - t @ h_ov @ t).ravel()

    n = n_steps_for(beta_max, dbeta)
    _, ys = integrate(rhs, np.zeros(shape[0] * shape[1], dtype=dtype), 0.0, beta_max / n, n)
    t = ys[-1].reshape(shape)
    return t, h0 + float(np.real(np.sum(h_ov * t.T)))
