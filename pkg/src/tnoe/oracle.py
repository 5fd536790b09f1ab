"""Exact reference results that share no residual code with the propagators.

* dense Hermitian eigensolver (cyclic Jacobi, LAPACK for large matrices)
* Fermi-Dirac closed forms with a bisected chemical potential
* sum over states for quadratic bosonic Hamiltonians in a truncated Fock basis
* exact autocorrelation functions by eigen-decomposition
* the three one-dimensional statistics as ODEs and closed forms
* a matrix-level check of the connected form of the real-time equations
"""

from dataclasses import dataclass, field
from itertools import combinations
import math

import numpy as np
from scipy.special import expit, gammaln, logsumexp

from . import kernels
from .constants import KB_CM_PER_K, TWO_PI_C
from .errors import BasisCapExceeded, ModelValidationError, NoConvergence
from .integrate import step_rk4

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

JACOBI_MAX_DIM = 64
MAX_FOCK_DIM = 6000


# ---------------------------------------------------------------------------
# eigensolver


def eigh(A, method="auto", tol=1e-14, max_sweeps=60):
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    64 x 64).
    """
    A = np.asarray(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    scale = max(np.max(np.abs(A), initial=0.0), 1e-300)
    if np.max(np.abs(A - A.conj().T), initial=0.0) > 1e-10 * scale:
        raise ModelValidationError("A", "matrix is not Hermitian")
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_DIM else "lapack"
    if method == "lapack":
        return np.linalg.eigh(A)
    if method != "jacobi":
        raise ValueError(f"unknown method {method!r}")
    work = np.array(0.5 * (A + A.conj().T), dtype=complex, order="C")
    V = np.eye(n, dtype=complex)
    sweeps = kernels.jacobi_sweeps(work, V, tol * scale, max_sweeps)
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = work.diagonal().real.copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    V = V[:, order]
    if not np.iscomplexobj(A):
        V = _realify(V)
    return w, V


def _realify(V):
    # A real symmetric matrix has real eigenvectors; strip the arbitrary phase.
    out = np.empty(V.shape)
    for k in range(V.shape[1]):
        v = V[:, k]
        j = np.argmax(np.abs(v))
        v = v * (abs(v[j]) / v[j])
        out[:, k] = v.real
    return out


# ---------------------------------------------------------------------------
# fermions


@dataclass
class ExactReference:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    beta: np.ndarray = None
    T: np.ndarray = None
    mu: np.ndarray = None
    occupations: np.ndarray = None
    D: np.ndarray = None
    lnZ: np.ndarray = None
    Z: np.ndarray = None
    U: np.ndarray = None
    S: np.ndarray = None
    A: np.ndarray = None
    extra: dict = field(default_factory=dict)


def _safe_exp(x):
    with np.errstate(over="ignore"):
        return np.exp(x)


def fermi_occupations(eps, beta, mu):
    return expit(-beta * (np.asarray(eps) - mu))


def bisect_mu(eps, n_el, beta, tol=1e-13, max_iter=400):
    """Chemical potential with sum_p n_p = n_el for the given levels."""
    eps = np.asarray(eps, dtype=float)
    M = len(eps)
    if not 0 < n_el < M:
        raise ValueError(f"bisection bracket failure: n_el={n_el} outside (0, {M})")
    if beta == 0.0:
        return float("nan")
    lo = eps.min() - 10.0 / beta
    hi = eps.max() + 10.0 / beta
    # widen until the bracket holds (expit saturates for huge beta spreads)
    while fermi_occupations(eps, beta, lo).sum() > n_el:
        lo -= (hi - lo)
    while fermi_occupations(eps, beta, hi).sum() < n_el:
        hi += (hi - lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        n = fermi_occupations(eps, beta, mid).sum()
        if abs(n - n_el) <= tol:
            return mid
        if n < n_el:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fermi_dirac_reference(model, beta_grid, method="auto"):
    """Exact grand-canonical one-body results with the electron count fixed.

    lnZ is ln Tr exp(-beta (H - mu N)) = -beta E0 + sum_p ln(1 + exp(-beta (eps_p - mu))).
    """
    eps, V = eigh(model.h, method=method)
    betas = np.atleast_1d(np.asarray(beta_grid, dtype=float))
    K, M = len(betas), model.M
    mu = np.empty(K)
    occ = np.empty((K, M))
    D = np.empty((K, M, M), dtype=np.result_type(V, float))
    lnZ = np.empty(K)
    U = np.empty(K)
    S = np.empty(K)
    nu = model.n_el / M
    for k, b in enumerate(betas):
        if b == 0.0:
            mu[k] = np.nan
            n = np.full(M, nu)
            lnZ[k] = np.nan
            S[k] = -M * (nu * math.log(nu) + (1 - nu) * math.log(1 - nu))
        else:
            mu[k] = bisect_mu(eps, model.n_el, b)
            n = fermi_occupations(eps, b, mu[k])
            lnZ[k] = -b * model.E0 + np.sum(np.logaddexp(0.0, -b * (eps - mu[k])))
        occ[k] = n
        D[k] = (V * n) @ V.conj().T
        U[k] = model.E0 + float(np.dot(eps, n))
        if b != 0.0:
            S[k] = b * (U[k] - mu[k] * model.n_el) + lnZ[k]
    with np.errstate(divide="ignore"):
        T = 1.0 / betas
    return ExactReference(eigenvalues=eps, eigenvectors=V, beta=betas, T=T, mu=mu, occupations=occ,
                          D=D, lnZ=lnZ, Z=_safe_exp(lnZ), U=U, S=S, A=-lnZ / betas)


def fermion_fock_lnZ(model, beta, mu):
    """ln Tr exp(-beta (H - mu N)) by explicit enumeration of the Fock space.

    Builds the many-body one-body operator in every particle-number sector
    (Jordan-Wigner signs) and diagonalizes it.  Intended for M <= 12.
    """
    M = model.M
    h = np.asarray(model.h)
    terms = []
    for N in range(M + 1):
        states = [sum(1 << p for p in occ) for occ in combinations(range(M), N)]
        index = {s: k for k, s in enumerate(states)}
        H = np.zeros((len(states), len(states)), dtype=complex)
        for col, st in enumerate(states):
            for q in range(M):
                if not st >> q & 1:
                    continue
                sign_q = (-1) ** bin(st & ((1 << q) - 1)).count("1")
                st1 = st ^ (1 << q)
                for p in range(M):
                    if st1 >> p & 1:
                        continue
                    sign_p = (-1) ** bin(st1 & ((1 << p) - 1)).count("1")
                    H[index[st1 | (1 << p)], col] += sign_p * sign_q * h[p, q]
        e = np.linalg.eigvalsh(H) if len(states) > 1 else np.real(np.diag(H))
        terms.append(logsumexp(-beta * (e - mu * N)))
    return float(-beta * model.E0 + logsumexp(terms))


# ---------------------------------------------------------------------------
# bosons


@dataclass(frozen=True)
class FockBasis:
    caps: tuple

    def __post_init__(self):
        object.__setattr__(self, "caps", tuple(int(c) for c in self.caps))

    @property
    def N(self):
        return len(self.caps)

    @property
    def dims(self):
        return tuple(c + 1 for c in self.caps)

    @property
    def dim(self):
        return int(np.prod(self.dims))

    def states(self):
        """Occupation tuples in lexicographic order (last mode fastest)."""
        return np.array(np.unravel_index(np.arange(self.dim), self.dims)).T

    def index(self, occ):
        return int(np.ravel_multi_index(tuple(occ), self.dims))

    def grown(self, step=4):
        return FockBasis(tuple(c + step for c in self.caps))


def operator_matrix(basis, h0=0.0, h_up=None, h_dn=None, h_ud=None, h_uu=None, h_dd=None):
    N = basis.N
    z1 = np.zeros(N)
    z2 = np.zeros((N, N))

    def arr(a, z):
        return np.array(z if a is None else a, dtype=float, order="C")

    return kernels.boson_matrix(float(h0), arr(h_up, z1), arr(h_dn, z1), arr(h_ud, z2),
                                arr(h_uu, z2), arr(h_dd, z2), np.asarray(basis.caps, dtype=np.int64))


def hamiltonian_matrix(model, basis):
    if basis.dim > MAX_FOCK_DIM:
        raise BasisCapExceeded(f"Fock dimension {basis.dim} exceeds {MAX_FOCK_DIM}")
    return operator_matrix(basis, model.h0, model.h_up, model.h_dn, model.h_ud, model.h_uu, model.h_dd)


def annihilation_matrices(basis):
    mats = []
    for i in range(basis.N):
        e = np.zeros(basis.N)
        e[i] = 1.0
        mats.append(operator_matrix(basis, h_dn=e))
    return mats


def _diagonalize(model, basis):
    H = hamiltonian_matrix(model, basis)
    if np.allclose(H, H.T, atol=1e-12, rtol=0):
        E, V = np.linalg.eigh(H)
        return E, V, V.T
    import scipy.linalg

    E, V = scipy.linalg.eig(H)
    if np.max(np.abs(E.imag)) > 1e-8 * max(1.0, np.max(np.abs(E))):
        raise NoConvergence("non-Hermitian model has complex spectrum")
    order = np.argsort(E.real)
    E = E.real[order]
    V = V[:, order]
    return E, V, np.linalg.inv(V)


def _initial_caps(model, T_max):
    kT = KB_CM_PER_K * T_max
    w = model.omega
    shift = np.abs(model.h_up) / w
    caps = np.ceil(8.0 + 10.0 * kT / w + 2.0 * shift ** 2).astype(int)
    return tuple(int(c) for c in caps)


@dataclass
class BosonReference:
    T: np.ndarray
    beta: np.ndarray
    Z: np.ndarray
    lnZ: np.ndarray
    U: np.ndarray
    S: np.ndarray
    A: np.ndarray
    d_up: np.ndarray
    d_dn: np.ndarray
    d_ud: np.ndarray
    d_uu: np.ndarray
    d_dd: np.ndarray
    energies: np.ndarray
    basis: FockBasis
    n_states: int = None

    @property
    def occupations(self):
        return np.array([np.diag(d) for d in self.d_ud])

    def densities(self, k):
        from .boson import ThermalDensitySet

        return ThermalDensitySet(Z=float(self.Z[k]), lnZ=float(self.lnZ[k]), d_up=self.d_up[k],
                                 d_dn=self.d_dn[k], d_ud=self.d_ud[k], d_uu=self.d_uu[k], d_dd=self.d_dd[k])


def _sos_on_basis(model, basis, betas, n_states):
    E, V, Vinv = _diagonalize(model, basis)
    if n_states is not None:
        keep = slice(0, int(n_states))
        E, V, Vinv = E[keep], V[:, keep], Vinv[keep, :]
    A = annihilation_matrices(basis)
    At = [Vinv @ a @ V for a in A]          # a_i in the eigenbasis (restricted)
    Ct = [Vinv @ a.T @ V for a in A]        # a_i^+
    N = basis.N
    K = len(betas)
    out = {k: np.empty((K, N)) for k in ("d_up", "d_dn")}
    out.update({k: np.empty((K, N, N)) for k in ("d_ud", "d_uu", "d_dd")})
    lnZ = np.empty(K)
    U = np.empty(K)
    # diagonal elements of products in the eigenbasis; weighting per temperature below
    diag_a = np.array([np.real(np.diag(a)) for a in At])
    diag_c = np.array([np.real(np.diag(c)) for c in Ct])
    prod_ud = np.empty((N, N, len(E)))
    prod_uu = np.empty((N, N, len(E)))
    prod_dd = np.empty((N, N, len(E)))
    if n_states is None:
        for i in range(N):
            for j in range(N):
                prod_ud[i, j] = np.real(np.sum(Ct[j] * At[i].T, axis=1))   # <a_j^+ a_i>
                prod_uu[i, j] = np.real(np.sum(At[i] * At[j].T, axis=1))   # <a_i a_j>
                prod_dd[i, j] = np.real(np.sum(Ct[i] * Ct[j].T, axis=1))   # <a_i^+ a_j^+>
    else:
        # products must be formed in the full space before restricting
        full = [a for a in A]
        for i in range(N):
            for j in range(N):
                prod_ud[i, j] = np.real(np.diag(Vinv @ (full[j].T @ full[i]) @ V))
                prod_uu[i, j] = np.real(np.diag(Vinv @ (full[i] @ full[j]) @ V))
                prod_dd[i, j] = np.real(np.diag(Vinv @ (full[i].T @ full[j].T) @ V))
    for k, b in enumerate(betas):
        x = -b * E
        lnZ[k] = logsumexp(x)
        w = np.exp(x - lnZ[k])
        U[k] = np.dot(w, E)
        out["d_up"][k] = diag_a @ w
        out["d_dn"][k] = diag_c @ w
        out["d_ud"][k] = prod_ud @ w
        out["d_uu"][k] = prod_uu @ w
        out["d_dd"][k] = prod_dd @ w
    return E, lnZ, U, out


def boson_sos(model, T_grid, n_states=None, basis=None, tol=1e-8, max_dim=MAX_FOCK_DIM):
    """Sum-over-states thermal data for a quadratic bosonic model.

    Without an explicit ``basis`` the per-mode caps grow until ln Z at every
    temperature changes by less than ``tol``.  ``n_states`` restricts the sum
    to the lowest eigenstates (initialization experiments).
    """
    T = np.atleast_1d(np.asarray(T_grid, dtype=float))
    betas = 1.0 / (KB_CM_PER_K * T)
    if basis is None:
        basis = FockBasis(_initial_caps(model, T.max()))
        prev = None
        while True:
            if basis.dim > max_dim:
                raise BasisCapExceeded(f"basis {basis.caps} (dim {basis.dim}) exceeds cap {max_dim}")
            E, lnZ, U, d = _sos_on_basis(model, basis, betas, None)
            if prev is not None and np.max(np.abs(lnZ - prev)) < tol:
                break
            prev = lnZ
            basis = basis.grown(2)
        if n_states is not None:
            E, lnZ, U, d = _sos_on_basis(model, basis, betas, n_states)
    else:
        E, lnZ, U, d = _sos_on_basis(model, basis, betas, n_states)
    Z = np.exp(lnZ)
    A = -lnZ / betas
    S = betas * U + lnZ
    return BosonReference(T=T, beta=betas, Z=Z, lnZ=lnZ, U=U, S=S, A=A, energies=E, basis=basis,
                          n_states=n_states, **d)


# ---------------------------------------------------------------------------
# real-time autocorrelation


def exact_time_acf(model, tau_grid, basis=None, tol=1e-10, max_dim=MAX_FOCK_DIM):
    """<0| exp(-i H tau) |0> from the eigen-decomposition of H in a Fock basis.

    ``tau`` in fs, energies in cm^-1.  Caps grow until successive bases agree
    to ``tol`` over the grid.
    """
    tau = np.asarray(tau_grid, dtype=float)

    def acf_on(b):
        H = hamiltonian_matrix(model, b)
        E, V = np.linalg.eigh(H)
        weights = np.abs(V[0]) ** 2
        phase = np.exp(-1j * TWO_PI_C * np.outer(tau, E - model.h0))
        return np.exp(-1j * TWO_PI_C * model.h0 * tau) * (phase @ weights), E, weights

    if basis is not None:
        acf, E, w = acf_on(basis)
        return acf, {"basis": basis, "energies": E, "weights": w}
    basis = FockBasis(tuple(int(np.ceil(6 + 2.0 * (abs(h) / w) ** 2)) for h, w in zip(model.h_up, model.omega)))
    prev = None
    while True:
        if basis.dim > max_dim:
            raise BasisCapExceeded(f"basis {basis.caps} (dim {basis.dim}) exceeds cap {max_dim}")
        acf, E, w = acf_on(basis)
        if prev is not None and np.max(np.abs(acf - prev)) < tol:
            return acf, {"basis": basis, "energies": E, "weights": w}
        prev = acf
        basis = basis.grown(2)


def displaced_oscillator_acf(omega, d, tau, E_vert=0.0):
    """Closed-form ACF for one mode displaced by ``d`` (dimensionless) with unchanged frequency."""
    tau = np.asarray(tau, dtype=float)
    S = 0.5 * d * d
    e00 = E_vert - omega * S + 0.5 * omega
    x = TWO_PI_C * tau
    return np.exp(-1j * e00 * x + S * (np.exp(-1j * omega * x) - 1.0))


def poisson_fc_factors(d, n_max):
    S = 0.5 * d * d
    n = np.arange(n_max + 1)
    return np.exp(-S + n * math.log(S) - gammaln(n + 1)) if S > 0 else (n == 0).astype(float)


def fc_factors_bruteforce(d, n_max, x_half_width=None, n_grid=20001):
    """|<n|0_d>|^2 by numerical quadrature of harmonic-oscillator wavefunctions.

    Dimensionless coordinates: psi_n(x) for the excited surface centred at
    ``d``, the ground state at the origin.
    """
    if x_half_width is None:
        x_half_width = abs(d) + 12.0 + 2.0 * math.sqrt(2 * n_max + 1)
    x = np.linspace(-x_half_width, x_half_width, n_grid)
    psi0 = np.pi ** -0.25 * np.exp(-0.5 * x ** 2)
    y = x - d
    out = np.empty(n_max + 1)
    prev = np.zeros_like(y)
    cur = np.pi ** -0.25 * np.exp(-0.5 * y ** 2)
    for n in range(n_max + 1):
        out[n] = _trapezoid(cur * psi0, x) ** 2
        nxt = math.sqrt(2.0 / (n + 1)) * y * cur - math.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
    return out


# ---------------------------------------------------------------------------
# one-dimensional statistics


STATISTICS = {+1: "bose-einstein", -1: "fermi-dirac", 0: "boltzmann"}


def statistics_closed_form(omega, alpha, T):
    """n = 1 / (exp(omega / k_B T) - alpha); alpha is the quadratic-term factor."""
    x = omega / (KB_CM_PER_K * np.asarray(T, dtype=float))
    if alpha == 0:
        return np.exp(-x)
    if alpha == 1:
        return 1.0 / np.expm1(x)
    if alpha == -1:
        return expit(-x)
    raise ValueError("alpha must be +1, 0 or -1")


def statistics_1d(omega, alpha, T_grid, substeps=None, dbeta_max=None):
    """Integrate dn/dtau = omega/(k_B tau^2) (n + alpha n^2) and compare with the closed form.

    The ODE is integrated in beta (dn/dbeta = -omega (n + alpha n^2)) with
    classical RK4 between consecutive grid temperatures.  For alpha = 0 the
    curve is the Boltzmann law obtained from the linear s-equation of bosons
    at f = 0, which is *not* the physical boson result.
    """
    T = np.asarray(T_grid, dtype=float)
    if np.any(T <= 0) or np.any(np.diff(T) <= 0):
        raise ValueError("temperature grid must be positive and ascending")
    if omega <= 0:
        raise ValueError("omega must be positive")
    betas = 1.0 / (KB_CM_PER_K * T)
    if dbeta_max is None:
        dbeta_max = 0.002 / omega

    def rhs(_, y):
        return -omega * (y + alpha * y * y)

    n = np.empty(len(T))
    y = np.array([statistics_closed_form(omega, alpha, T[0])])
    n[0] = y[0]
    for k in range(1, len(T)):
        span = betas[k] - betas[k - 1]
        m = substeps or max(1, int(math.ceil(abs(span) / dbeta_max)))
        h = span / m
        b = betas[k - 1]
        for _ in range(m):
            y = step_rk4(y, b, h, rhs)
            b += h
        n[k] = y[0]
    exact = statistics_closed_form(omega, alpha, T)
    label = STATISTICS[alpha]
    if alpha == 0:
        label += " (f=0 s-equation: incorrect for bosons)"
    return {"T": T, "numeric": n, "closed_form": exact, "max_abs_error": float(np.max(np.abs(n - exact))),
            "alpha": alpha, "label": label}


# ---------------------------------------------------------------------------
# connected form of the real-time equations


def _creation_operator(basis, t0, t_up, t_uu):
    N = basis.N
    mats = annihilation_matrices(basis)
    dag = [m.T for m in mats]
    T = t0 * np.eye(basis.dim, dtype=complex)
    for i in range(N):
        T = T + t_up[i] * dag[i]
        for j in range(N):
            T = T + 0.5 * t_uu[i, j] * (dag[i] @ dag[j])
    return T


def _exp_on_vacuum(T_op, t0):
    """exp(T)|0> for T = t0 + (strictly raising part)."""
    dim = T_op.shape[0]
    X = T_op - t0 * np.eye(dim)
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    out = v.copy()
    term = v
    for k in range(1, 4 * dim + 1):
        term = X @ term / k
        if not np.any(term):
            break
        out += term
    return np.exp(t0) * out


def connected_form_check(model, amps, residual, caps=None):
    """Max deviation between H e^T|0> and e^T (dT)|0>, with dT from ``residual``.

    ``residual(model, amps)`` must return (r0, r_up, r_uu) = i d(t0, t^i, t^ij)/dtau
    in energy units.  Components within two quanta of the basis edge are
    excluded since H couples them to truncated states.
    """
    N = model.N
    basis = FockBasis(caps or ((8,) * N if N <= 2 else (5,) * N))
    t0, t_up, t_uu = amps.t0, np.asarray(amps.t_up), np.asarray(amps.t_uu)
    T_op = _creation_operator(basis, t0, t_up, t_uu)
    psi = _exp_on_vacuum(T_op, t0)
    H = hamiltonian_matrix(model, basis).astype(complex)
    lhs = H @ psi
    r0, r_up, r_uu = residual(model, amps)
    R_op = _creation_operator(basis, r0, r_up, r_uu)
    rhs = R_op @ psi
    occ = basis.states()
    inner = np.all(occ <= np.asarray(basis.caps) - 2, axis=1)
    dev = np.abs(lhs - rhs)[inner]
    scale = max(1.0, float(np.max(np.abs(lhs[inner]))))
    return {"max_deviation": float(np.max(dev)), "relative": float(np.max(dev) / scale),
            "basis": basis.caps, "n_compared": int(inner.sum())}
