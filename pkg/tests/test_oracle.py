import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tnoe.constants import KB_CM_PER_K
from tnoe.errors import BasisCapExceeded, ModelValidationError
from tnoe.fctime import TimeAmplitudes, residual_time
from tnoe.model import OneBodyFermionModel
from tnoe.oracle import (FockBasis, annihilation_matrices, bisect_mu, boson_sos, connected_form_check, eigh,
                         exact_time_acf, fc_factors_bruteforce, fermi_dirac_reference, fermi_occupations,
                         fermion_fock_lnZ, poisson_fc_factors, statistics_1d, statistics_closed_form)

from conftest import oscillator, random_fermion, random_surface


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 2 ** 31), cplx=st.booleans())
def test_jacobi_matches_lapack(n, seed, cplx):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + (1j * rng.normal(size=(n, n)) if cplx else 0)
    A = A + A.conj().T
    w, V = eigh(A, "jacobi")
    assert np.allclose(w, np.linalg.eigvalsh(A), atol=1e-12)
    assert np.allclose(V.conj().T @ A @ V, np.diag(w), atol=1e-11)
    assert np.isrealobj(V) == (not cplx)


def test_jacobi_degenerate_and_auto():
    A = np.diag([1.0, 1.0, 2.0])
    w, V = eigh(A)
    assert np.allclose(w, [1, 1, 2])
    assert np.allclose(V.T @ V, np.eye(3))
    big = np.random.default_rng(0).normal(size=(80, 80))
    w, _ = eigh(big + big.T)
    assert np.allclose(w, np.linalg.eigvalsh(big + big.T))


def test_eigh_rejects_bad_input():
    with pytest.raises(ModelValidationError):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        eigh(np.eye(2), "qr")


def test_bisect_mu():
    eps = np.array([-1.0, -0.2, 0.3, 2.0])
    for beta in (0.1, 5.0, 1e4):
        mu = bisect_mu(eps, 2, beta)
        assert fermi_occupations(eps, beta, mu).sum() == pytest.approx(2.0, abs=1e-10)
    with pytest.raises(ValueError):
        bisect_mu(eps, 4, 1.0)


@pytest.mark.parametrize("M,n_el", [(2, 1), (5, 2), (8, 3)])
def test_fermi_dirac_lnZ_matches_fock_space(M, n_el):
    m = random_fermion(np.random.default_rng(M), M=M, n_el=n_el)
    ref = fermi_dirac_reference(m, [0.3, 2.0])
    for k, beta in enumerate(ref.beta):
        assert fermion_fock_lnZ(m, beta, ref.mu[k]) == pytest.approx(ref.lnZ[k], abs=1e-10)
        assert np.trace(ref.D[k]).real == pytest.approx(n_el, abs=1e-10)


def test_fermi_dirac_thermo_identity():
    m = random_fermion(np.random.default_rng(3), M=6, n_el=2)
    ref = fermi_dirac_reference(m, [1.0])
    # S = beta (U - mu N) + lnZ with lnZ the grand potential
    assert ref.S[0] == pytest.approx(ref.beta[0] * (ref.U[0] - ref.mu[0] * 2) + ref.lnZ[0], abs=1e-10)
    n = ref.occupations[0]
    S = -np.sum(n * np.log(n) + (1 - n) * np.log1p(-n))
    assert ref.S[0] == pytest.approx(S, abs=1e-10)


def test_boson_single_mode_closed_form():
    w = 400.0
    T = np.array([50.0, 300.0, 1000.0])
    ref = boson_sos(oscillator(w), T)
    x = w / (KB_CM_PER_K * T)
    assert np.allclose(ref.lnZ, -0.5 * x - np.log(-np.expm1(-x)), atol=1e-8)
    assert np.allclose(ref.occupations[:, 0], 1 / np.expm1(x), atol=1e-8)


def test_boson_sos_normal_modes():
    # Z of a coupled surface equals the product over its normal modes
    m = random_surface(np.random.default_rng(8), 2, shift=40.0)
    ref = boson_sos(m, [300.0])
    E = ref.energies
    exc = E[1:] - E[0]
    nu1 = exc[0]
    # second fundamental: lowest level that is not an overtone of the first
    nu2 = next(e for e in exc[1:] if abs(e / nu1 - round(e / nu1)) > 1e-6)
    nu = np.array([nu1, nu2])
    x = nu / (KB_CM_PER_K * 300.0)
    lnZ = -E[0] / (KB_CM_PER_K * 300.0) - np.sum(np.log(-np.expm1(-x)))
    assert ref.lnZ[0] == pytest.approx(lnZ, abs=1e-7)


def test_basis_cap_exceeded(two_mode):
    with pytest.raises(BasisCapExceeded):
        boson_sos(two_mode, [300.0], max_dim=10)


def test_fock_ladder_algebra():
    b = FockBasis((6, 5))
    a = annihilation_matrices(b)
    assert a[0].shape == (b.dim, b.dim)
    comm = a[0] @ a[0].T - a[0].T @ a[0]
    inner = b.states()[:, 0] < 6
    assert np.allclose(np.diag(comm)[inner], 1.0)
    assert np.allclose(a[0] @ a[1] - a[1] @ a[0], 0.0)


def test_poisson_matches_quadrature():
    for d in (0.5, 1.0, 2.0):
        assert np.max(np.abs(poisson_fc_factors(d, 12) - fc_factors_bruteforce(d, 12))) < 1e-10
    assert np.allclose(poisson_fc_factors(0.0, 3), [1, 0, 0, 0])


def test_exact_acf_weights_sum_to_one(two_mode_coupled):
    acf, info = exact_time_acf(two_mode_coupled, [0.0, 10.0])
    assert info["weights"].sum() == pytest.approx(1.0, abs=1e-10)
    assert acf[0] == pytest.approx(1.0)


@pytest.mark.parametrize("alpha", [1, -1, 0])
def test_statistics(alpha):
    out = statistics_1d(300.0, alpha, np.linspace(10.0, 1000.0, 50))
    assert out["max_abs_error"] < 1e-8
    with pytest.raises(ValueError):
        statistics_closed_form(300.0, 2, 100.0)


def test_statistics_grid_validation():
    with pytest.raises(ValueError):
        statistics_1d(300.0, 1, [100.0, 50.0])


@pytest.mark.parametrize("seed", range(4))
def test_connected_form(seed):
    rng = np.random.default_rng(seed)
    N = 1 + seed % 2
    m = random_surface(rng, N)
    X = rng.normal(0, 0.2, (N, N)) + 1j * rng.normal(0, 0.2, (N, N))
    amps = TimeAmplitudes(0.1 + 0.2j, rng.normal(0, 0.2, N) + 1j * rng.normal(0, 0.2, N), 0.5 * (X + X.T))
    assert connected_form_check(m, amps, residual_time)["max_deviation"] < 1e-9

    def wrong(model, a):
        r0, r_up, r_uu = residual_time(model, a)
        return r0, r_up, 0.5 * r_uu

    assert connected_form_check(m, amps, wrong)["max_deviation"] > 1e-3


def test_fermion_model_with_energy_offset():
    m = OneBodyFermionModel(M=2, n_el=1, h=np.diag([0.0, 1.0]), E0=3.0)
    ref = fermi_dirac_reference(m, [2.0])
    assert fermion_fock_lnZ(m, 2.0, ref.mu[0]) == pytest.approx(ref.lnZ[0], abs=1e-12)
    assert ref.U[0] == pytest.approx(3.0 + ref.occupations[0][1], abs=1e-12)
