"""Pure-Python implementations of the compiled kernels (same signatures)."""

import math

import numpy as np


def jacobi_sweeps(A, V, tol, max_sweeps):
    n = A.shape[0]
    for sweep in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(A[np.triu_indices(n, 1)]) ** 2) * 2.0)
        if off <= tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                e = apq / mag
                tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                if tau >= 0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * np.conj(e) * colq
                A[:, q] = s * e * colp + c * colq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * np.conj(e) * vq
                V[:, q] = s * e * vp + c * vq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * e * rowq
                A[q, :] = s * np.conj(e) * rowp + c * rowq
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
    return -1


def boson_matrix(h0, h_up, h_dn, h_ud, h_uu, h_dd, caps):
    caps = np.asarray(caps, dtype=np.int64)
    N = len(caps)
    dims = caps + 1
    stride = np.ones(N, dtype=np.int64)
    for i in range(N - 2, -1, -1):
        stride[i] = stride[i + 1] * dims[i + 1]
    dim = int(np.prod(dims))
    occ = np.array(np.unravel_index(np.arange(dim), tuple(dims))).T
    H = np.zeros((dim, dim))
    cols = np.arange(dim)
    H[cols, cols] += h0 + occ @ np.diag(h_ud)
    for i in range(N):
        ni = occ[:, i].astype(float)
        up = occ[:, i] < caps[i]
        H[cols[up] + stride[i], cols[up]] += h_up[i] * np.sqrt(ni[up] + 1.0)
        dn = occ[:, i] > 0
        H[cols[dn] - stride[i], cols[dn]] += h_dn[i] * np.sqrt(ni[dn])
        up2 = occ[:, i] + 2 <= caps[i]
        H[cols[up2] + 2 * stride[i], cols[up2]] += 0.5 * h_uu[i, i] * np.sqrt((ni[up2] + 1) * (ni[up2] + 2))
        dn2 = occ[:, i] >= 2
        H[cols[dn2] - 2 * stride[i], cols[dn2]] += 0.5 * h_dd[i, i] * np.sqrt(ni[dn2] * (ni[dn2] - 1))
        for j in range(N):
            if j == i:
                continue
            nj = occ[:, j].astype(float)
            m = (occ[:, j] > 0) & up
            H[cols[m] + stride[i] - stride[j], cols[m]] += h_ud[i, j] * np.sqrt(nj[m] * (ni[m] + 1.0))
            if j > i:
                m = up & (occ[:, j] < caps[j])
                H[cols[m] + stride[i] + stride[j], cols[m]] += 0.5 * (h_uu[i, j] + h_uu[j, i]) * np.sqrt((ni[m] + 1) * (nj[m] + 1))
                m = dn & (occ[:, j] > 0)
                H[cols[m] - stride[i] - stride[j], cols[m]] += 0.5 * (h_dd[i, j] + h_dd[j, i]) * np.sqrt(ni[m] * nj[m])
    return H


class _Tensors:
    """Minimal model stand-in for the residual functions."""

    def __init__(self, h0f, h_up, h_dn, h_ud, h_uu, h_dd):
        self.h0 = h0f
        self.h_up, self.h_dn, self.h_ud, self.h_uu, self.h_dd = h_up, h_dn, h_ud, h_uu, h_dd
        self.N = len(h_up)

    def h0_at(self, f):
        # the constant is passed in already re-ordered
        return self.h0


def _split(y, N):
    sizes = np.cumsum([1, N, N, N * N, N * N])
    s0, tu, td, tud, tuu, tdd = np.split(y, sizes)
    return s0[0], tu, td, tud.reshape(N, N), tuu.reshape(N, N), tdd.reshape(N, N)


def boson_rhs(y, h0f, h_up, h_dn, h_ud, h_uu, h_dd, f):
    from .boson import BosonAmplitudes, residual_boson

    N = len(h_up)
    r = residual_boson(_Tensors(h0f, h_up, h_dn, h_ud, h_uu, h_dd), BosonAmplitudes(*_split(y, N)), f)
    return -np.concatenate([[r.s0], r.t_up, r.t_dn, r.t_ud.ravel(), r.t_uu.ravel(), r.t_dd.ravel()])


def boson_rk4(y0, h0f, h_up, h_dn, h_ud, h_uu, h_dd, f, dbeta, n_steps):
    def rhs(y):
        return boson_rhs(y, h0f, h_up, h_dn, h_ud, h_uu, h_dd, f)

    ys = np.empty((n_steps + 1, len(y0)))
    ys[0] = y = np.array(y0, dtype=float)
    h = dbeta
    for s in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        ys[s + 1] = y
        if not np.all(np.isfinite(y)):
            return ys, s + 1
    return ys, -1


def time_rk4(h_up, h_dn, h_ud, h_uu, h_dd, scale, dtau, n_steps, growth_tol):
    from .fctime import TimeAmplitudes, residual_time

    N = len(h_up)
    model = _Tensors(0.0, h_up, h_dn, h_ud, h_uu, h_dd)

    def rhs(y):
        amps = TimeAmplitudes(y[0], y[1:1 + N], y[1 + N:].reshape(N, N))
        r0, r_up, r_uu = residual_time(model, amps)
        return -1j * scale * np.concatenate([[r0], r_up, r_uu.ravel()])

    y = np.zeros(1 + N + N * N, dtype=complex)
    t0 = np.zeros(n_steps + 1, dtype=complex)
    h = dtau
    for s in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        t0[s + 1] = y[0]
        if not y[0].real <= growth_tol:
            return t0, y, s + 1
    return t0, y, -1
