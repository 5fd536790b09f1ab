"""Command-line entry point ``noe``.

Every run writes CSV files and a ``manifest.json`` into the output directory
(``--output``, else ``$NOE_OUTPUT_DIR``, else ``./noe_output``).  Exit codes:
0 success, 1 configuration or input error, 2 numerical failure, 3 failed
verification.
"""

import argparse
import csv
import json
import os
import platform
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, constants, kernels
from .errors import (BasisCapExceeded, DegenerateConstraint, ModelParseError, ModelValidationError,
                     NoConvergence, NonPositiveTemperature, NonPositiveZ, NyquistError, StepUnstable,
                     TnoeError)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3

MODES = ("fermion-thermal", "boson-thermal", "fc-spectrum", "statistics-demo", "verify")

DEFAULTS = {
    "fermion-thermal": {"model": "random20.json", "integrator": "rk4", "beta_max": 20.0, "dbeta": 0.005,
                        "f": None},
    "boson-thermal": {"model": "2mode.json", "integrator": "rk4", "t0": 60.0, "tmax": 500.0,
                      "init_states": 3, "f": 0.0, "dbeta": None, "oracle": False},
    "fc-spectrum": {"model": "displaced1d.json", "damping": 10.0, "tau_max": None, "dtau": None,
                    "emin": None, "emax": None, "de": None, "window": None},
    "statistics-demo": {"omega": 300.0, "tmin": 10.0, "tmax": 1000.0, "n_points": 100},
    "verify": {"suite": "all"},
}

VERIFY_SUITES = ("all", "fermion", "boson", "fc", "statistics", "connected", "cc")


class ConfigError(Exception):
    pass


class VerificationFailed(Exception):
    def __init__(self, rows):
        super().__init__("verification failed")
        self.rows = rows


# ---------------------------------------------------------------------------
# configuration


def _parser():
    p = argparse.ArgumentParser(prog="noe", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="mode", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option values; flags override it")
        sp.add_argument("--output", "-o", help="output directory")
        return sp

    sp = common(sub.add_parser("fermion-thermal", help="grand-canonical flow for a one-body fermion model"))
    sp.add_argument("--model")
    sp.add_argument("--integrator", choices=("rk4", "leapfrog", "euler"))
    sp.add_argument("--beta-max", type=float)
    sp.add_argument("--dbeta", type=float)
    sp.add_argument("--f", type=float, help="uniform contraction value (default n_el/M)")

    sp = common(sub.add_parser("boson-thermal", help="thermal flow for a quadratic boson model"))
    sp.add_argument("--model")
    sp.add_argument("--integrator", choices=("rk4", "leapfrog", "leapfrog-T", "euler"))
    sp.add_argument("--t0", type=float, help="initial temperature (K)")
    sp.add_argument("--tmax", type=float, help="final temperature (K)")
    sp.add_argument("--init-states", type=int, help="eigenstates used for the initial density")
    sp.add_argument("--f", type=float)
    sp.add_argument("--dbeta", type=float, help="step in beta (cm)")
    sp.add_argument("--oracle", action="store_true", default=None,
                    help="also write sum-over-states values on the same grid")

    sp = common(sub.add_parser("fc-spectrum", help="real-time ACF and Franck-Condon spectrum"))
    sp.add_argument("--model")
    sp.add_argument("--damping", type=float, help="Lorentzian HWHM (cm^-1)")
    sp.add_argument("--tau-max", type=float, help="propagation time (fs)")
    sp.add_argument("--dtau", type=float, help="time step (fs)")
    sp.add_argument("--emin", type=float)
    sp.add_argument("--emax", type=float)
    sp.add_argument("--de", type=float, help="energy grid spacing (cm^-1)")
    sp.add_argument("--window", choices=("cosine",))

    sp = common(sub.add_parser("statistics-demo", help="one-mode Bose-Einstein, Fermi-Dirac and Boltzmann ODEs"))
    sp.add_argument("--omega", type=float)
    sp.add_argument("--tmin", type=float)
    sp.add_argument("--tmax", type=float)
    sp.add_argument("--n-points", type=int)

    sp = common(sub.add_parser("verify", help="run the oracle comparison suite"))
    sp.add_argument("--suite", choices=VERIFY_SUITES)
    return p


def resolve_config(args):
    """Defaults, then the ``--config`` file, then explicit flags."""
    cfg = dict(DEFAULTS[args.mode])
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in data.items():
            key = key.replace("-", "_")
            if key == "mode":
                if value != args.mode:
                    raise ConfigError(f"config is for mode {value!r}, not {args.mode!r}")
                continue
            if key == "output":
                cfg["output"] = value
                continue
            if key not in cfg:
                raise ConfigError(f"unknown option {key!r} for {args.mode}")
            cfg[key] = value
    for key, value in vars(args).items():
        if key in ("mode", "config") or value is None:
            continue
        cfg[key] = value
    cfg["output"] = cfg.get("output") or os.environ.get("NOE_OUTPUT_DIR") or "noe_output"
    _validate(args.mode, cfg)
    return cfg


def _validate(mode, cfg):
    def positive(*keys):
        for k in keys:
            if cfg.get(k) is not None and not float(cfg[k]) > 0:
                raise ConfigError(f"{k} must be positive")

    positive("beta_max", "dbeta", "t0", "tmax", "damping", "tau_max", "dtau", "de", "omega", "tmin")
    if mode == "boson-thermal":
        if cfg["tmax"] <= cfg["t0"]:
            raise ConfigError("tmax must exceed t0")
        if int(cfg["init_states"]) < 1:
            raise ConfigError("init_states must be at least 1")
        if cfg["f"] < 0:
            raise ConfigError("f must be non-negative for bosons")
    if mode == "fermion-thermal" and cfg["f"] is not None and not 0 < cfg["f"] < 1:
        raise ConfigError("f must lie strictly between 0 and 1")
    if mode == "statistics-demo":
        if cfg["tmax"] <= cfg["tmin"]:
            raise ConfigError("tmax must exceed tmin")
        if int(cfg["n_points"]) < 2:
            raise ConfigError("n_points must be at least 2")
    if mode == "fc-spectrum" and None not in (cfg["emin"], cfg["emax"]) and cfg["emax"] <= cfg["emin"]:
        raise ConfigError("emax must exceed emin")


def find_model(name):
    """A path as given, else a model shipped with the package."""
    path = Path(name)
    if path.exists():
        return path
    shipped = resources.files("tnoe") / "data" / "models" / name
    if shipped.is_file():
        return Path(str(shipped))
    raise ConfigError(f"model file not found: {name}")


def shipped_models():
    root = resources.files("tnoe") / "data" / "models"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


# ---------------------------------------------------------------------------
# output


def fmt(x):
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(outdir, mode, cfg, files, wall, extra=None):
    import scipy

    manifest = {
        "mode": mode,
        "config": cfg,
        "files": files,
        "constants": constants.as_dict(),
        "versions": {"tnoe": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "kernel_backend": kernels.BACKEND,
        "wall_time_s": wall,
    }
    if extra:
        manifest.update(extra)
    write_json(outdir / "manifest.json", manifest)


# ---------------------------------------------------------------------------
# modes


def run_fermion(cfg, outdir):
    from .fermion import propagate_fermion
    from .model import ContractionScheme, load_model

    model = load_model(find_model(cfg["model"]), "fermion")
    scheme = None if cfg["f"] is None else ContractionScheme.uniform_fermion(model.M, cfg["f"])
    traj = propagate_fermion(model, scheme, beta_max=cfg["beta_max"], dbeta=cfg["dbeta"],
                             integrator=cfg["integrator"])
    M = model.M
    header = ["beta", "T", "lnZ", "U", "mu", "A", "S"] + [f"D_{p}{p}" for p in range(M)]
    rows = ([b, t, z, u, m, a, s] + list(np.real(np.diagonal(D)))
            for b, t, z, u, m, a, s, D in zip(traj.beta, traj.T, traj.lnZ, traj.U, traj.mu, traj.A, traj.S,
                                               traj.D))
    write_csv(outdir / "fermion_thermal.csv", header, rows)
    occ = traj.occupations()
    return ["fermion_thermal.csv"], {"summary": {"samples": len(traj), "min_occupation": float(occ.min()),
                                                 "max_occupation": float(occ.max())}}


def run_boson(cfg, outdir):
    from .boson import run_thermal
    from .model import load_model
    from .oracle import boson_sos

    model = load_model(find_model(cfg["model"]), "boson")
    traj = run_thermal(model, T0=cfg["t0"], T_max=cfg["tmax"], n_states=int(cfg["init_states"]), f=cfg["f"],
                       dbeta=cfg["dbeta"], integrator=cfg["integrator"])
    header = ["T", "beta", "lnZ", "Z", "U", "A", "S", "Cv"] + [f"n_{i}" for i in range(model.N)]
    rows = ([t, b, lz, z, u, a, s, c] + list(n) for t, b, lz, z, u, a, s, c, n in
            zip(traj.T, traj.beta, traj.lnZ, traj.Z, traj.U, traj.A, traj.S, traj.Cv, traj.n))
    write_csv(outdir / "boson_thermal.csv", header, rows)
    files = ["boson_thermal.csv"]
    extra = {"summary": {"samples": len(traj)}}
    if cfg["oracle"]:
        ref = boson_sos(model, traj.T)
        rel = np.abs(traj.Z - ref.Z) / ref.Z
        dU = np.abs(traj.U - ref.U)
        write_csv(outdir / "boson_oracle.csv", ["T", "Z_sos", "U_sos", "Z_rel_error", "U_abs_error"],
                  zip(traj.T, ref.Z, ref.U, rel, dU))
        files.append("boson_oracle.csv")
        extra["summary"].update(max_Z_rel_error=float(rel.max()), max_U_abs_error=float(dU.max()),
                                oracle_basis=list(ref.basis.caps))
    return files, extra


def run_fc(cfg, outdir):
    from .fctime import compute_spectrum, default_energy_grid, propagate_time
    from .model import load_model

    model = load_model(find_model(cfg["model"]), "boson")
    gamma = cfg["damping"]
    tau_max = cfg["tau_max"] or 8.0 / (constants.TWO_PI_C * gamma)
    acf = propagate_time(model, tau_max, cfg["dtau"])
    grid = default_energy_grid(model, gamma)
    lo = grid[0] if cfg["emin"] is None else cfg["emin"]
    hi = grid[-1] if cfg["emax"] is None else cfg["emax"]
    de = cfg["de"] or gamma / 10.0
    grid = np.linspace(lo, hi, int(round((hi - lo) / de)) + 1)
    spec = compute_spectrum(acf, gamma, grid, window=cfg["window"])
    write_csv(outdir / "acf.csv", ["tau_fs", "Re", "Im", "abs"],
              zip(acf.tau, acf.acf.real, acf.acf.imag, np.abs(acf.acf)))
    write_csv(outdir / "spectrum.csv", ["energy_cm1", "intensity"], zip(spec.energy, spec.intensity))
    pos, height = spec.peaks()
    return ["acf.csv", "spectrum.csv"], {"summary": {"tau_max_fs": tau_max, "dtau_fs": acf.dtau,
                                                     "peaks_cm1": pos, "peak_heights": height}}


def run_statistics(cfg, outdir):
    from .oracle import statistics_1d

    T = np.linspace(cfg["tmin"], cfg["tmax"], int(cfg["n_points"]))
    results = {a: statistics_1d(cfg["omega"], a, T) for a in (1, -1, 0)}
    header = ["T"]
    cols = [T]
    for a, r in results.items():
        name = r["label"].split(" ")[0]
        header += [f"{name}_numeric", f"{name}_closed_form"]
        cols += [r["numeric"], r["closed_form"]]
    write_csv(outdir / "statistics.csv", header, zip(*cols))
    return ["statistics.csv"], {"summary": {r["label"]: r["max_abs_error"] for r in results.values()}}


def run_verify(cfg, outdir):
    from .verify import run_suite

    rows = run_suite(cfg["suite"])
    write_json(outdir / "verify_report.json", {"suite": cfg["suite"], "checks": rows})
    print(format_table(rows))
    extra = {"summary": {"passed": sum(r["passed"] for r in rows if r["gating"]),
                         "failed": sum(not r["passed"] for r in rows if r["gating"])}}
    if any(r["gating"] and not r["passed"] for r in rows):
        raise VerificationFailed(rows)
    return ["verify_report.json"], extra


def format_table(rows):
    lines = [f"{'check':<44} {'deviation':>12} {'tolerance':>12}  result"]
    for r in rows:
        status = "PASS" if r["passed"] else ("FAIL" if r["gating"] else "info")
        lines.append(f"{r['name']:<44} {r['deviation']:>12.3e} {r['tolerance']:>12.1e}  {status}")
    return "\n".join(lines)


RUNNERS = {
    "fermion-thermal": run_fermion,
    "boson-thermal": run_boson,
    "fc-spectrum": run_fc,
    "statistics-demo": run_statistics,
    "verify": run_verify,
}


def run(argv=None):
    """Parse ``argv``, run the requested mode and return the exit code."""
    args = _parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        outdir = Path(cfg["output"])
        try:
            outdir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {outdir}: {exc}") from None
        start = time.perf_counter()
        try:
            files, extra = RUNNERS[args.mode](cfg, outdir)
            code = EXIT_OK
        except VerificationFailed:
            files, extra, code = ["verify_report.json"], {"summary": "verification failed"}, EXIT_VERIFY
        wall = time.perf_counter() - start
        write_manifest(outdir, args.mode, cfg, files, wall, extra)
        return code
    except (ConfigError, ModelParseError, ModelValidationError, NyquistError, NonPositiveTemperature) as exc:
        print(f"noe: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepUnstable, NoConvergence, DegenerateConstraint, NonPositiveZ, BasisCapExceeded) as exc:
        where = ""
        if isinstance(exc, StepUnstable) and exc.block is not None:
            where = f" [block {exc.block}]"
        print(f"noe: numerical failure{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TnoeError as exc:
        print(f"noe: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv=None):
    sys.exit(run(argv))
