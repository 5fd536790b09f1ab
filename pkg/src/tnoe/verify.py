"""Oracle comparison suite run by ``noe verify`` on the shipped models."""

import numpy as np

from .constants import C_CM_PER_FS, TWO_PI_C, beta_from_temperature
from .integrate import derivative_5pt

BETAS = (0.1, 1.0, 5.0, 20.0)


def _row(name, deviation, tolerance, gating=True, compare="le"):
    deviation = float(deviation)
    passed = deviation <= tolerance if compare == "le" else deviation >= tolerance
    return {"name": name, "deviation": deviation, "tolerance": float(tolerance), "passed": bool(passed),
            "gating": gating}


def _model(name, kind):
    from .cli import find_model
    from .model import load_model

    return load_model(find_model(name), kind)


def _nearest(xs, targets):
    return [int(np.argmin(np.abs(xs - t))) for t in targets]


def check_fermion():
    from .fermion import propagate_fermion
    from .model import ContractionScheme, OneBodyFermionModel
    from .oracle import fermi_dirac_reference, fermion_fock_lnZ

    rows = []
    model = _model("random20.json", "fermion")
    traj = propagate_fermion(model, beta_max=max(BETAS), dbeta=0.005)
    idx = _nearest(traj.beta, BETAS)
    ref = fermi_dirac_reference(model, traj.beta[idx])
    rows.append(_row("fermion D vs Fermi-Dirac", max(np.max(np.abs(traj.D[i] - ref.D[k])) for k, i in enumerate(idx)),
                     1e-6))
    rows.append(_row("fermion lnZ vs Fermi-Dirac", np.max(np.abs(traj.lnZ[idx] - ref.lnZ)), 1e-5))
    occ = traj.occupations()
    rows.append(_row("fermion occupation bound violation",
                     max(0.0, -occ.min(), occ.max() - 1.0), 1e-8))
    fd = derivative_5pt(traj.s0, traj.beta[1] - traj.beta[0])
    dev = np.max(np.abs(traj.dlnZ[2:-2] - fd) / np.abs(traj.dlnZ[2:-2]))
    rows.append(_row("fermion ds0/dbeta vs finite difference", dev, 1e-6))
    Ds = [propagate_fermion(model, ContractionScheme.uniform_fermion(model.M, f), beta_max=5.0, dbeta=0.005).D
          for f in (0.2, 0.5, 0.8)]
    rows.append(_row("fermion f-invariance of D", max(np.max(np.abs(Ds[0] - d)) for d in Ds[1:]), 1e-7))
    small = OneBodyFermionModel(M=6, n_el=3, h=np.asarray(model.h)[:6, :6], E0=0.0)
    ref = fermi_dirac_reference(small, [1.0])
    rows.append(_row("Fermi-Dirac lnZ vs Fock enumeration",
                     abs(ref.lnZ[0] - fermion_fock_lnZ(small, 1.0, ref.mu[0])), 1e-10))
    two = _model("twolevel.json", "fermion")
    tr = propagate_fermion(two, beta_max=20.0, dbeta=0.005)
    ref = fermi_dirac_reference(two, tr.beta[-1:])
    rows.append(_row("two-level D vs Fermi-Dirac", np.max(np.abs(tr.D[-1] - ref.D[0])), 1e-6))
    return rows


def check_boson():
    from .boson import init_from_states, propagate_boson, run_thermal
    from .model import BosonQuadraticModel
    from .oracle import boson_sos, statistics_closed_form

    rows = []
    model = _model("2mode.json", "boson")
    T0, T1 = 60.0, 500.0
    b0 = beta_from_temperature(T0)
    start = boson_sos(model, [T0])
    traj = propagate_boson(model, init_from_states(start.densities(0)), b0, beta_from_temperature(T1))
    ref = boson_sos(model, traj.T)
    rows.append(_row("boson Z vs sum over states (full init)", np.max(np.abs(traj.Z / ref.Z - 1.0)), 1e-3))
    rows.append(_row("boson U vs sum over states (full init)", np.max(np.abs(traj.U - ref.U)), 1.0))
    fd = -derivative_5pt(traj.lnZ, traj.beta[1] - traj.beta[0])
    rows.append(_row("boson U vs -dlnZ/dbeta", np.max(np.abs(fd - traj.U[2:-2]) / np.abs(traj.U[2:-2])), 1e-6))
    sym = max(np.max(np.abs(traj.t_uu - np.swapaxes(traj.t_uu, 1, 2))),
              np.max(np.abs(traj.t_dd - np.swapaxes(traj.t_dd, 1, 2))))
    rows.append(_row("boson pair-amplitude symmetry", sym, 1e-10))
    ns = [run_thermal(model, T0, T1, 3, f=f).n for f in (0.0, 0.1, 0.5)]
    rows.append(_row("boson f-invariance of occupations", max(np.max(np.abs(ns[0] - n)) for n in ns[1:]), 1e-7))
    three = run_thermal(model, T0, T1, 3)
    two = run_thermal(model, T0, T1, 2)
    ref = boson_sos(model, three.T)
    err3 = np.abs(three.Z / ref.Z - 1.0)
    err2 = abs(two.Z[-1] / ref.Z[-1] - 1.0)
    # informational: the truncated start shifts Z by more than this tolerance
    rows.append(_row("boson Z, 3-state start, 60-500 K", err3.max(), 1e-3, gating=False))
    rows.append(_row("boson U, 3-state start, 60-500 K", np.max(np.abs(three.U - ref.U)), 1.0))
    rows.append(_row("boson 2-state / 3-state error ratio", err2 / err3[-1], 10.0, compare="ge"))
    w = 300.0
    one = BosonQuadraticModel(omega=[w], h0=0.5 * w, h_up=[0.0], h_dn=[0.0], h_ud=[[w]], h_uu=[[0.0]],
                              h_dd=[[0.0]])
    amps = init_from_states(boson_sos(one, [T0]).densities(0))
    tr = propagate_boson(one, amps, b0, beta_from_temperature(T1), dbeta=1e-6)
    rows.append(_row("1-mode occupation vs Bose-Einstein",
                     np.max(np.abs(tr.n[:, 0] - statistics_closed_form(w, 1, tr.T))), 1e-8))
    return rows


def check_fc():
    from .fctime import compute_spectrum, propagate_time
    from .oracle import displaced_oscillator_acf, exact_time_acf, poisson_fc_factors

    rows = []
    one = _model("displaced1d.json", "boson")
    acf = propagate_time(one, 1000.0)
    rows.append(_row("displaced oscillator ACF vs analytic",
                     np.max(np.abs(acf.acf - displaced_oscillator_acf(1000.0, 1.0, acf.tau))), 1e-6))
    period = 1.0 / (C_CM_PER_FS * 1000.0)
    revival = propagate_time(one, period, dtau=period / 4000)
    rows.append(_row("ACF revival after one period", abs(1.0 - abs(revival.acf[-1])), 1e-6))
    for name in ("2mode.json", "2mode_coupled.json"):
        model = _model(name, "boson")
        acf2 = propagate_time(model, 1000.0)
        exact, _ = exact_time_acf(model, acf2.tau)
        rows.append(_row(f"ACF vs exact propagation ({name})", np.max(np.abs(acf2.acf - exact)), 1e-6))
    gamma = 10.0
    long = propagate_time(one, 10.0 / (TWO_PI_C * gamma))
    grid = np.arange(-1000.0, 5000.0 + 0.5, 1.0)
    spec = compute_spectrum(long, gamma, grid)
    pos, height = spec.peaks()
    fc = poisson_fc_factors(1.0, len(pos) - 1)
    rel = np.max(np.abs(height / height.sum() - fc / fc.sum()) / (fc / fc.sum()))
    rows.append(_row("spectrum peak spacing minus omega", np.max(np.abs(np.diff(pos) - 1000.0)), 1.0))
    rows.append(_row("spectrum intensities vs Poisson (relative)", rel, 0.02))
    return rows


def check_statistics():
    from .oracle import statistics_1d

    T = np.linspace(10.0, 1000.0, 200)
    return [_row(f"1-D statistics: {r['label'].split(' ')[0]}", r["max_abs_error"], 1e-8)
            for r in (statistics_1d(300.0, a, T) for a in (1, -1, 0))]


def random_surface(rng, N):
    from .model import VerticalSurfaceSpec, assemble_excited_surface

    w = rng.uniform(200.0, 800.0, N)
    A = rng.normal(0.0, 30.0, (N, N))
    spec = VerticalSurfaceSpec(omega=w, E_vert=rng.uniform(0.0, 500.0), kappa=rng.normal(0.0, 80.0, N),
                               Phi=np.diag(w * rng.uniform(0.8, 1.2, N)) + 0.5 * (A + A.T))
    return assemble_excited_surface(spec)


def random_time_amplitudes(rng, N, scale=0.2):
    from .fctime import TimeAmplitudes

    X = rng.normal(0.0, scale, (N, N)) + 1j * rng.normal(0.0, scale, (N, N))
    return TimeAmplitudes(complex(rng.normal(0, scale), rng.normal(0, scale)),
                          rng.normal(0.0, scale, N) + 1j * rng.normal(0.0, scale, N), 0.5 * (X + X.T))


def dropped_term_residual(model, amps):
    """Time residual with the h_k t^ki term removed (negative control)."""
    from .fctime import residual_time

    r0, r_up, r_uu = residual_time(model, amps)
    return r0, r_up - model.h_dn @ np.asarray(amps.t_uu), r_uu


def check_connected(n_instances=20, seed=7):
    from .fctime import residual_time
    from .oracle import connected_form_check

    rng = np.random.default_rng(seed)
    good, bad = [], []
    for k in range(n_instances):
        N = 1 + k % 2
        model = random_surface(rng, N)
        amps = random_time_amplitudes(rng, N)
        good.append(connected_form_check(model, amps, residual_time)["max_deviation"])
        bad.append(connected_form_check(model, amps, dropped_term_residual)["max_deviation"])
    return [_row("connected form identity (20 instances)", max(good), 1e-9),
            _row("mutation control / identity ratio", min(bad) / max(max(good), 1e-300), 1e6, compare="ge")]


def check_cc():
    from .fermion import cc_limit_check

    model = _model("random20.json", "fermion")
    out = cc_limit_check(model, rng=0)
    return [_row("CC-limit residual vs one-body CC", out["max_deviation"], 1e-12),
            _row("CC-limit residual mu dependence", out["mu_spread"], 1e-12)]


SUITES = {
    "fermion": check_fermion,
    "boson": check_boson,
    "fc": check_fc,
    "statistics": check_statistics,
    "connected": check_connected,
    "cc": check_cc,
}


def run_suite(name="all"):
    names = list(SUITES) if name == "all" else [name]
    rows = []
    for n in names:
        for row in SUITES[n]():
            row["suite"] = n
            rows.append(row)
    return rows
