# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: cyclic Jacobi eigensolver and Fock-space Hamiltonian assembly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()


def jacobi_sweeps(double complex[:, ::1] A, double complex[:, ::1] V, double tol, int max_sweeps):
    """In-place cyclic Jacobi on Hermitian ``A``; accumulates rotations in ``V``.

    Returns the number of sweeps used, or -1 without convergence.
    """
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double off, mag, tau, t, c, s
    cdef double complex e, ec, akp, akq, vkp, vkq, apq
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += A[p, q].real * A[p, q].real + A[p, q].imag * A[p, q].imag
        if sqrt(2.0 * off) <= tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = hypot(apq.real, apq.imag)
                if mag == 0.0:
                    continue
                e = apq / mag
                ec = e.conjugate()
                tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                if tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                # columns: A <- A J with J_pp = c, J_qq = c, J_pq = s e, J_qp = -s conj(e)
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * ec * akq
                    A[k, q] = s * e * akp + c * akq
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * ec * vkq
                    V[k, q] = s * e * vkp + c * vkq
                # rows: A <- J^+ A
                for k in range(n):
                    akp = A[p, k]
                    akq = A[q, k]
                    A[p, k] = c * akp - s * e * akq
                    A[q, k] = s * ec * akp + c * akq
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
    return -1


def boson_matrix(double h0, double[::1] h_up, double[::1] h_dn, double[:, ::1] h_ud,
                 double[:, ::1] h_uu, double[:, ::1] h_dd, long[::1] caps):
    """Dense matrix of a quadratic bosonic operator in a truncated Fock basis.

    Basis states are ordered lexicographically with the last mode fastest.
    """
    cdef Py_ssize_t N = caps.shape[0]
    cdef Py_ssize_t dim = 1
    cdef Py_ssize_t i, j, col, row
    cdef long[::1] stride = np.empty(N, dtype=np.int64)
    cdef long[::1] occ = np.zeros(N, dtype=np.int64)
    for i in range(N - 1, -1, -1):
        stride[i] = dim
        dim *= caps[i] + 1
    out = np.zeros((dim, dim), dtype=np.float64)
    cdef double[:, ::1] H = out
    cdef double ni, nj, amp
    for col in range(dim):
        # decode occupations
        row = col
        for i in range(N):
            occ[i] = row // stride[i]
            row = row % stride[i]
        H[col, col] += h0
        for i in range(N):
            ni = occ[i]
            H[col, col] += h_ud[i, i] * ni
            if occ[i] < caps[i]:
                H[col + stride[i], col] += h_up[i] * sqrt(ni + 1.0)
            if occ[i] > 0:
                H[col - stride[i], col] += h_dn[i] * sqrt(ni)
            if occ[i] + 2 <= caps[i]:
                H[col + 2 * stride[i], col] += 0.5 * h_uu[i, i] * sqrt((ni + 1.0) * (ni + 2.0))
            if occ[i] >= 2:
                H[col - 2 * stride[i], col] += 0.5 * h_dd[i, i] * sqrt(ni * (ni - 1.0))
            for j in range(N):
                if j == i:
                    continue
                nj = occ[j]
                # a_i^+ a_j
                if occ[j] > 0 and occ[i] < caps[i]:
                    H[col + stride[i] - stride[j], col] += h_ud[i, j] * sqrt(nj) * sqrt(ni + 1.0)
                if j > i:
                    # 1/2 (h_ij + h_ji) with symmetric pair tensors
                    if occ[i] < caps[i] and occ[j] < caps[j]:
                        amp = 0.5 * (h_uu[i, j] + h_uu[j, i]) * sqrt((ni + 1.0) * (nj + 1.0))
                        H[col + stride[i] + stride[j], col] += amp
                    if occ[i] > 0 and occ[j] > 0:
                        amp = 0.5 * (h_dd[i, j] + h_dd[j, i]) * sqrt(ni * nj)
                        H[col - stride[i] - stride[j], col] += amp
    return out


# ---------------------------------------------------------------------------
# amplitude flows: dense N x N helpers on raw row-major buffers

cdef inline void _mm(double alpha, const double* A, bint tA, const double* B, bint tB,
                     double* C, Py_ssize_t N, bint accumulate) noexcept nogil:
    """C (+)= alpha op(A) op(B)."""
    cdef Py_ssize_t i, j, k
    cdef double acc, a, b
    for i in range(N):
        for j in range(N):
            acc = 0.0
            for k in range(N):
                a = A[k * N + i] if tA else A[i * N + k]
                b = B[j * N + k] if tB else B[k * N + j]
                acc += a * b
            if accumulate:
                C[i * N + j] += alpha * acc
            else:
                C[i * N + j] = alpha * acc


cdef struct BosonCtx:
    Py_ssize_t N
    double h0f
    double f
    double fb
    const double* hu
    const double* hd
    const double* hud
    const double* huu
    const double* hdd
    double* work


cdef void _boson_rhs(const double* y, BosonCtx* c, double* out) noexcept nogil:
    """out = d/dbeta of (s0, t^i, t_i, t^i_j, t^ij, t_ij) = -residual."""
    cdef Py_ssize_t N = c.N, N2 = c.N * c.N, i, j, k, l
    cdef double f = c.f, fb = c.fb, r0, x
    cdef const double* hu = c.hu
    cdef const double* hd = c.hd
    cdef const double* hud = c.hud
    cdef const double* huu = c.huu
    cdef const double* hdd = c.hdd
    cdef const double* tu = y + 1
    cdef const double* td = y + 1 + N
    cdef const double* tud = y + 1 + 2 * N
    cdef const double* tuu = tud + N2
    cdef const double* tdd = tuu + N2
    cdef double* oup = out + 1
    cdef double* odn = out + 1 + N
    cdef double* oud = out + 1 + 2 * N
    cdef double* ouu = oud + N2
    cdef double* odd = ouu + N2
    cdef double* a = c.work
    cdef double* b = a + N
    cdef double* cv = b + N
    cdef double* e = cv + N
    cdef double* g = e + N
    cdef double* p = g + N
    cdef double* q = p + N
    cdef double* S1 = q + N
    cdef double* S2 = S1 + N2
    for k in range(N):
        a[k] = 0.0; b[k] = 0.0; cv[k] = 0.0; e[k] = 0.0; g[k] = 0.0; p[k] = 0.0; q[k] = 0.0
        for l in range(N):
            a[k] += hud[k * N + l] * tu[l]
            b[k] += td[l] * hud[l * N + k]
            cv[k] += huu[l * N + k] * td[l]
            e[k] += tu[l] * hdd[l * N + k]
            g[k] += hdd[k * N + l] * tu[l]
            p[k] += td[l] * huu[l * N + k]
            q[k] += huu[k * N + l] * td[l]
    r0 = c.h0f
    x = 0.0
    for k in range(N):
        r0 += b[k] * tu[k] + hd[k] * tu[k] + hu[k] * td[k]
        x += e[k] * tu[k] + p[k] * td[k]
        for l in range(N):
            r0 += hud[k * N + l] * tud[l * N + k]
            x += hdd[k * N + l] * tuu[k * N + l] + huu[k * N + l] * tdd[k * N + l]
    out[0] = r0 + 0.5 * x
    for i in range(N):
        x = fb * (hu[i] + a[i] + q[i])
        for k in range(N):
            x += tud[i * N + k] * (hu[k] + a[k] + cv[k]) + (b[k] + e[k] + hd[k]) * tuu[k * N + i]
        oup[i] = x
        x = f * (hd[i] + b[i] + e[i])
        for k in range(N):
            x += tud[k * N + i] * (hd[k] + g[k] + b[k]) + (a[k] + p[k] + hu[k]) * tdd[k * N + i]
        odn[i] = x
    # t^i_j
    for k in range(N2):
        oud[k] = f * fb * hud[k]
    _mm(f, tud, 0, hud, 0, oud, N, 1)
    _mm(fb, hud, 0, tud, 0, oud, N, 1)
    _mm(1.0, hud, 0, tud, 0, S1, N, 0)
    _mm(1.0, tud, 0, S1, 0, oud, N, 1)
    _mm(1.0, hud, 1, tdd, 0, S1, N, 0)
    _mm(1.0, tuu, 0, S1, 0, oud, N, 1)
    _mm(fb, huu, 1, tdd, 0, oud, N, 1)
    _mm(1.0, huu, 0, tdd, 0, S1, N, 0)
    _mm(1.0, tud, 0, S1, 0, oud, N, 1)
    _mm(f, tuu, 0, hdd, 0, oud, N, 1)
    _mm(1.0, hdd, 0, tud, 0, S1, N, 0)
    _mm(1.0, tuu, 1, S1, 0, oud, N, 1)
    # t^ij
    _mm(1.0, hud, 0, tuu, 0, S1, N, 0)
    _mm(1.0, tud, 0, S1, 0, S2, N, 0)
    for k in range(N2):
        S2[k] += fb * S1[k]
    _mm(fb, tud, 0, huu, 0, S2, N, 1)
    for i in range(N):
        for j in range(N):
            ouu[i * N + j] = S2[i * N + j] + S2[j * N + i] + fb * fb * huu[i * N + j]
    _mm(1.0, huu, 0, tud, 1, S1, N, 0)
    _mm(1.0, tud, 0, S1, 0, ouu, N, 1)
    _mm(1.0, hdd, 0, tuu, 0, S1, N, 0)
    _mm(1.0, tuu, 1, S1, 0, ouu, N, 1)
    # t_ij
    _mm(1.0, hud, 1, tdd, 0, S1, N, 0)
    _mm(1.0, tud, 1, S1, 0, S2, N, 0)
    for k in range(N2):
        S2[k] += f * S1[k]
    _mm(f, hdd, 1, tud, 0, S2, N, 1)
    for i in range(N):
        for j in range(N):
            odd[i * N + j] = S2[i * N + j] + S2[j * N + i] + f * f * hdd[i * N + j]
    _mm(1.0, huu, 0, tdd, 0, S1, N, 0)
    _mm(1.0, tdd, 0, S1, 0, odd, N, 1)
    _mm(1.0, hdd, 0, tud, 0, S1, N, 0)
    _mm(1.0, tud, 1, S1, 0, odd, N, 1)
    for k in range(1 + 2 * N + 3 * N2):
        out[k] = -out[k]


cdef inline bint _finite(const double* y, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(n):
        if not (y[k] - y[k] == 0.0):
            return 0
    return 1


def boson_rk4(double[::1] y0, double h0f, double[::1] h_up, double[::1] h_dn, double[:, ::1] h_ud,
              double[:, ::1] h_uu, double[:, ::1] h_dd, double f, double dbeta, Py_ssize_t n_steps):
    """Classical RK4 for the thermal boson flow; returns (ys, first_bad_step or -1)."""
    cdef Py_ssize_t N = h_up.shape[0], n = y0.shape[0], s, k
    ys_arr = np.empty((n_steps + 1, n), dtype=np.float64)
    cdef double[:, ::1] ys = ys_arr
    buf = np.zeros(6 * n + 7 * N + 2 * N * N, dtype=np.float64)
    cdef double[::1] w = buf
    cdef double* k1 = &w[0]
    cdef double* k2 = k1 + n
    cdef double* k3 = k2 + n
    cdef double* k4 = k3 + n
    cdef double* tmp = k4 + n
    cdef double* y = tmp + n
    cdef BosonCtx c
    c.N = N
    c.h0f = h0f
    c.f = f
    c.fb = 1.0 + f
    c.hu = &h_up[0]
    c.hd = &h_dn[0]
    c.hud = &h_ud[0, 0]
    c.huu = &h_uu[0, 0]
    c.hdd = &h_dd[0, 0]
    c.work = y + n
    cdef double h = dbeta, h2 = 0.5 * dbeta
    cdef Py_ssize_t bad = -1
    for k in range(n):
        y[k] = y0[k]
        ys[0, k] = y0[k]
    with nogil:
        for s in range(n_steps):
            _boson_rhs(y, &c, k1)
            for k in range(n):
                tmp[k] = y[k] + h2 * k1[k]
            _boson_rhs(tmp, &c, k2)
            for k in range(n):
                tmp[k] = y[k] + h2 * k2[k]
            _boson_rhs(tmp, &c, k3)
            for k in range(n):
                tmp[k] = y[k] + h * k3[k]
            _boson_rhs(tmp, &c, k4)
            for k in range(n):
                y[k] = y[k] + (h / 6.0) * (k1[k] + 2.0 * (k2[k] + k3[k]) + k4[k])
                ys[s + 1, k] = y[k]
            if not _finite(y, n):
                bad = s + 1
                break
    return ys_arr, bad


def boson_rhs(double[::1] y, double h0f, double[::1] h_up, double[::1] h_dn, double[:, ::1] h_ud,
              double[:, ::1] h_uu, double[:, ::1] h_dd, double f):
    """Single evaluation of d/dbeta on a flat amplitude vector."""
    cdef Py_ssize_t N = h_up.shape[0], n = y.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    buf = np.zeros(7 * N + 2 * N * N, dtype=np.float64)
    cdef double[::1] w = buf
    cdef BosonCtx c
    c.N = N
    c.h0f = h0f
    c.f = f
    c.fb = 1.0 + f
    c.hu = &h_up[0]
    c.hd = &h_dn[0]
    c.hud = &h_ud[0, 0]
    c.huu = &h_uu[0, 0]
    c.hdd = &h_dd[0, 0]
    c.work = &w[0]
    _boson_rhs(&y[0], &c, &out[0])
    return out_arr


cdef void _time_rhs(const double complex* y, Py_ssize_t N, const double* hu, const double* hd,
                    const double* hud, const double* huu, const double* hdd, double scale,
                    double complex* v, double complex* S1, double complex* out) noexcept nogil:
    """out = -i scale (r0 - h0, r^i, r^ij) for the creation-only ansatz."""
    cdef Py_ssize_t N2 = N * N, i, j, k, l
    cdef const double complex* tu = y + 1
    cdef const double complex* tuu = y + 1 + N
    cdef double complex* oup = out + 1
    cdef double complex* ouu = out + 1 + N
    cdef double complex r0 = 0.0, x, acc
    cdef double complex mi = -1j * scale
    for l in range(N):
        v[l] = 0.0
        for k in range(N):
            v[l] = v[l] + tu[k] * hdd[k * N + l]
    for k in range(N):
        r0 = r0 + hd[k] * tu[k] + 0.5 * v[k] * tu[k]
        for l in range(N):
            r0 = r0 + 0.5 * hdd[k * N + l] * tuu[k * N + l]
    out[0] = mi * r0
    for i in range(N):
        x = hu[i]
        for k in range(N):
            x = x + hud[i * N + k] * tu[k] + (v[k] + hd[k]) * tuu[k * N + i]
        oup[i] = mi * x
    # S1 = hdd @ tuu
    for k in range(N):
        for j in range(N):
            acc = 0.0
            for l in range(N):
                acc = acc + hdd[k * N + l] * tuu[l * N + j]
            S1[k * N + j] = acc
    for i in range(N):
        for j in range(N):
            acc = huu[i * N + j]
            for k in range(N):
                acc = acc + tuu[k * N + i] * S1[k * N + j] + hud[i * N + k] * tuu[k * N + j] \
                    + hud[j * N + k] * tuu[k * N + i]
            ouu[i * N + j] = mi * acc


def time_rk4(double[::1] h_up, double[::1] h_dn, double[:, ::1] h_ud, double[:, ::1] h_uu,
             double[:, ::1] h_dd, double scale, double dtau, Py_ssize_t n_steps, double growth_tol):
    """RK4 for the real-time amplitudes from zero.

    Returns (t0 history, final flat amplitudes, first step with Re t0 > growth_tol or -1).
    """
    cdef Py_ssize_t N = h_up.shape[0], n = 1 + N + N * N, s, k
    t0_arr = np.zeros(n_steps + 1, dtype=np.complex128)
    cdef double complex[::1] t0 = t0_arr
    buf = np.zeros(6 * n + N + N * N, dtype=np.complex128)
    cdef double complex[::1] w = buf
    cdef double complex* y = &w[0]
    cdef double complex* k1 = y + n
    cdef double complex* k2 = k1 + n
    cdef double complex* k3 = k2 + n
    cdef double complex* k4 = k3 + n
    cdef double complex* tmp = k4 + n
    cdef double complex* v = tmp + n
    cdef double complex* S1 = v + N
    cdef const double* hu = &h_up[0]
    cdef const double* hd = &h_dn[0]
    cdef const double* hud = &h_ud[0, 0]
    cdef const double* huu = &h_uu[0, 0]
    cdef const double* hdd = &h_dd[0, 0]
    cdef double h = dtau, h2 = 0.5 * dtau
    cdef Py_ssize_t bad = -1
    with nogil:
        for s in range(n_steps):
            _time_rhs(y, N, hu, hd, hud, huu, hdd, scale, v, S1, k1)
            for k in range(n):
                tmp[k] = y[k] + h2 * k1[k]
            _time_rhs(tmp, N, hu, hd, hud, huu, hdd, scale, v, S1, k2)
            for k in range(n):
                tmp[k] = y[k] + h2 * k2[k]
            _time_rhs(tmp, N, hu, hd, hud, huu, hdd, scale, v, S1, k3)
            for k in range(n):
                tmp[k] = y[k] + h * k3[k]
            _time_rhs(tmp, N, hu, hd, hud, huu, hdd, scale, v, S1, k4)
            for k in range(n):
                y[k] = y[k] + (h / 6.0) * (k1[k] + 2.0 * (k2[k] + k3[k]) + k4[k])
            t0[s + 1] = y[0]
            if not (y[0].real <= growth_tol):
                bad = s + 1
                break
    final = np.array(buf[:n])
    return t0_arr, final, bad
