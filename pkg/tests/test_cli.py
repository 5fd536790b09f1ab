import csv
import json
import os
import subprocess
import sys

import pytest

from tnoe import cli, verify


def noe(*args, env=None, cwd=None):
    full = dict(os.environ)
    full.pop("NOE_OUTPUT_DIR", None)
    full.update(env or {})
    return subprocess.run([sys.executable, "-m", "tnoe", *args], capture_output=True, text=True, env=full, cwd=cwd)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(x) for x in r] for r in rows[1:]]


def test_fermion_thermal(tmp_path):
    out = tmp_path / "f"
    r = noe("fermion-thermal", "--model", "twolevel.json", "--beta-max", "5", "-o", str(out))
    assert r.returncode == 0, r.stderr
    header, rows = read_csv(out / "fermion_thermal.csv")
    assert header[:7] == ["beta", "T", "lnZ", "U", "mu", "A", "S"]
    assert rows[-1][0] == pytest.approx(5.0)
    man = json.loads((out / "manifest.json").read_text())
    assert man["mode"] == "fermion-thermal"
    assert man["kernel_backend"] in ("cython", "python")
    assert man["constants"]


def test_boson_thermal_with_oracle(tmp_path):
    out = tmp_path / "b"
    r = noe("boson-thermal", "--oracle", "-o", str(out))
    assert r.returncode == 0, r.stderr
    header, rows = read_csv(out / "boson_thermal.csv")
    assert header[:8] == ["T", "beta", "lnZ", "Z", "U", "A", "S", "Cv"]
    assert rows[0][0] == pytest.approx(60.0)
    assert rows[-1][0] == pytest.approx(500.0)
    summary = json.loads((out / "manifest.json").read_text())["summary"]
    assert summary["max_U_abs_error"] <= 1.0
    # the three-state start alone leaves Z about 2e-3 off; see the acceptance suite
    assert summary["max_Z_rel_error"] < 5e-3


def test_fc_spectrum(tmp_path):
    out = tmp_path / "fc"
    r = noe("fc-spectrum", "--damping", "20", "-o", str(out))
    assert r.returncode == 0, r.stderr
    _, acf = read_csv(out / "acf.csv")
    assert acf[0][1:3] == [1.0, 0.0]
    header, spec = read_csv(out / "spectrum.csv")
    assert header == ["energy_cm1", "intensity"]
    assert min(s[1] for s in spec) >= 0.0
    peaks = json.loads((out / "manifest.json").read_text())["summary"]["peaks_cm1"]
    assert peaks[0] == pytest.approx(0.0, abs=2.0)


def test_statistics_demo_and_env_output(tmp_path):
    target = tmp_path / "env_out"
    r = noe("statistics-demo", "--n-points", "20", env={"NOE_OUTPUT_DIR": str(target)})
    assert r.returncode == 0, r.stderr
    header, rows = read_csv(target / "statistics.csv")
    assert len(rows) == 20 and header[0] == "T"


def test_default_output_directory(tmp_path):
    r = noe("statistics-demo", "--n-points", "5", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "noe_output" / "statistics.csv").exists()


def test_reruns_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert noe("fc-spectrum", "--damping", "20", "-o", str(tmp_path / name)).returncode == 0
    for f in ("acf.csv", "spectrum.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"omega": 500.0, "n_points": 7, "tmin": 50.0}))
    out = tmp_path / "o"
    r = noe("statistics-demo", "--config", str(cfg), "--n-points", "9", "-o", str(out))
    assert r.returncode == 0, r.stderr
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["omega"] == 500.0
    assert man["config"]["n_points"] == 9
    _, rows = read_csv(out / "statistics.csv")
    assert rows[0][0] == 50.0 and len(rows) == 9


@pytest.mark.parametrize("args", [
    ("boson-thermal", "--t0", "500", "--tmax", "100"),
    ("fermion-thermal", "--model", "missing.json"),
    ("fc-spectrum", "--dtau", "5"),
    ("statistics-demo", "--tmin", "-3"),
])
def test_configuration_errors_exit_1(tmp_path, args):
    r = noe(*args, "-o", str(tmp_path))
    assert r.returncode == 1
    assert "configuration error" in r.stderr


def test_bad_config_file_exits_1(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert noe("statistics-demo", "--config", str(cfg), "-o", str(tmp_path)).returncode == 1
    cfg.write_text("{not json")
    assert noe("statistics-demo", "--config", str(cfg), "-o", str(tmp_path)).returncode == 1


def test_numerical_failure_exits_2(tmp_path):
    model = tmp_path / "stiff.json"
    model.write_text(json.dumps({"kind": "fermion", "M": 2, "n_el": 1, "E0": 0.0,
                                 "h": [[-5.0, 0.0], [0.0, 5.0]]}))
    r = noe("fermion-thermal", "--model", str(model), "--beta-max", "20", "--dbeta", "2", "-o", str(tmp_path))
    assert r.returncode == 2
    assert "numerical failure" in r.stderr


def test_verification_failure_exits_3(tmp_path, monkeypatch, capsys):
    def failing():
        return [verify._row("forced failure", 1.0, 0.1)]

    monkeypatch.setitem(verify.SUITES, "statistics", failing)
    assert cli.run(["verify", "--suite", "statistics", "-o", str(tmp_path)]) == 3
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["checks"][0]["passed"] is False
    assert "FAIL" in capsys.readouterr().out


def test_informational_rows_do_not_gate(tmp_path, monkeypatch):
    monkeypatch.setitem(verify.SUITES, "statistics", lambda: [verify._row("note", 1.0, 0.1, gating=False)])
    assert cli.run(["verify", "--suite", "statistics", "-o", str(tmp_path)]) == 0


@pytest.mark.parametrize("suite", ["statistics", "connected", "cc", "fc"])
def test_verify_suites_pass(tmp_path, suite):
    r = noe("verify", "--suite", suite, "-o", str(tmp_path))
    assert r.returncode == 0, r.stdout + r.stderr
    checks = json.loads((tmp_path / "verify_report.json").read_text())["checks"]
    assert checks and all(c["passed"] for c in checks if c["gating"])


def test_console_script_installed():
    r = subprocess.run(["noe", "--version"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.strip().startswith("noe ")
