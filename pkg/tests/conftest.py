import numpy as np
import pytest

from tnoe.cli import find_model
from tnoe.model import (BosonQuadraticModel, OneBodyFermionModel, VerticalSurfaceSpec, assemble_excited_surface,
                        load_model)


def random_fermion(rng, M=20, n_el=10, complex_h=True, scale=1.0):
    A = rng.normal(size=(M, M))
    if complex_h:
        A = A + 1j * rng.normal(size=(M, M))
    return OneBodyFermionModel(M=M, n_el=n_el, h=scale * 0.5 * (A + A.conj().T), E0=float(rng.normal()))


def random_surface_spec(rng, N, coupling=30.0, shift=80.0):
    w = rng.uniform(200.0, 800.0, N)
    A = rng.normal(0.0, coupling, (N, N))
    return VerticalSurfaceSpec(omega=w, E_vert=float(rng.uniform(0.0, 500.0)), kappa=rng.normal(0.0, shift, N),
                               Phi=np.diag(w * rng.uniform(0.8, 1.2, N)) + 0.5 * (A + A.T))


def random_surface(rng, N, **kw):
    return assemble_excited_surface(random_surface_spec(rng, N, **kw))


def oscillator(w, h0=None):
    """Undisplaced harmonic mode in the vacuum-ordered form."""
    return BosonQuadraticModel(omega=[w], h0=0.5 * w if h0 is None else h0, h_up=[0.0], h_dn=[0.0], h_ud=[[w]],
                               h_uu=[[0.0]], h_dd=[[0.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def two_mode():
    return load_model(find_model("2mode.json"), "boson")


@pytest.fixture(scope="session")
def two_mode_coupled():
    return load_model(find_model("2mode_coupled.json"), "boson")


@pytest.fixture(scope="session")
def displaced():
    return load_model(find_model("displaced1d.json"), "boson")


@pytest.fixture(scope="session")
def random20():
    return load_model(find_model("random20.json"), "fermion")
