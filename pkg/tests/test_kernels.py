import subprocess
import sys

import numpy as np
import pytest

from tnoe import _kernels_py, kernels
from tnoe.boson import init_from_states
from tnoe.constants import TWO_PI_C
from tnoe.oracle import FockBasis, boson_sos

from conftest import random_surface

compiled = pytest.importorskip("tnoe._kernels", reason="compiled extension not built")


@pytest.fixture(scope="module")
def surface():
    return random_surface(np.random.default_rng(21), 3, shift=40.0)


def test_jacobi_backends_agree():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
    A = np.ascontiguousarray(A + A.conj().T)
    outs = []
    for mod in (compiled, _kernels_py):
        W, V = A.copy(), np.eye(10, dtype=complex)
        assert mod.jacobi_sweeps(W, V, 1e-14, 60) >= 0
        outs.append(np.sort(W.diagonal().real))
    assert np.allclose(outs[0], outs[1], atol=1e-12)
    assert np.allclose(outs[0], np.linalg.eigvalsh(A), atol=1e-12)


def test_fock_matrix_backends_agree(surface):
    args = (surface.h0,) + kernels.tensor_args(surface) + (np.array([4, 3, 5], dtype=np.int64),)
    a, b = compiled.boson_matrix(*args), _kernels_py.boson_matrix(*args)
    assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(b))


@pytest.mark.parametrize("f", [0.0, 0.35])
def test_boson_flow_backends_agree(surface, f):
    from tnoe.boson import layout_for

    d = boson_sos(surface, [200.0], basis=FockBasis((8, 8, 8))).densities(0)
    y0 = layout_for(3).flatten(init_from_states(d, f).as_dict())
    args = (surface.h0_at(f),) + kernels.tensor_args(surface) + (f,)
    r1 = compiled.boson_rhs(y0, *args)
    r2 = _kernels_py.boson_rhs(y0, *args)
    assert np.max(np.abs(r1 - r2)) <= 1e-12 * np.max(np.abs(r2))
    a, bad_a = compiled.boson_rk4(y0, *args, -1e-5, 20)
    b, bad_b = _kernels_py.boson_rk4(y0, *args, -1e-5, 20)
    assert bad_a == bad_b == -1
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def test_time_flow_backends_agree(surface):
    args = kernels.tensor_args(surface) + (TWO_PI_C, 0.05, 200, 1e-4)
    t_a, y_a, bad_a = compiled.time_rk4(*args)
    t_b, y_b, bad_b = _kernels_py.time_rk4(*args)
    assert bad_a == bad_b == -1
    assert np.max(np.abs(t_a - t_b)) < 1e-13
    assert np.max(np.abs(y_a - y_b)) < 1e-13


def test_pure_python_switch():
    code = "import tnoe.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"TNOE_PURE_PYTHON": "1", "PATH": ""}, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND == "cython"
