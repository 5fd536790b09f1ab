"""Real-time propagation of exp(T)|0> for harmonic Franck-Condon problems.

The ground vibrational state of the initial surface is the vacuum.  On the
final surface H the wavefunction is written as exp(t0 + t^i a_i^+ +
1/2 t^ij a_i^+ a_j^+)|0>, so the autocorrelation function <0|exp(-iHt)|0>
is simply exp(t0).  Times are in fs and energies in cm^-1.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.signal import czt, find_peaks

from . import kernels
from .constants import C_CM_PER_FS, TWO_PI_C
from .errors import NyquistError, StepUnstable
from .integrate import n_steps_for

ACF_TOL = 1e-4


@dataclass
class TimeAmplitudes:
    t0: complex
    t_up: np.ndarray
    t_uu: np.ndarray
    tau: float = 0.0

    @classmethod
    def zeros(cls, N):
        return cls(0j, np.zeros(N, dtype=complex), np.zeros((N, N), dtype=complex), 0.0)


@dataclass
class AcfSeries:
    tau: np.ndarray
    acf: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dtau(self):
        return float(self.tau[1] - self.tau[0])


@dataclass
class Spectrum:
    energy: np.ndarray
    intensity: np.ndarray
    damping: float
    meta: dict = field(default_factory=dict)

    def peaks(self, rel_height=1e-2):
        """Positions and heights of local maxima above ``rel_height`` of the maximum."""
        top = float(np.max(self.intensity)) if len(self.intensity) else 0.0
        idx, _ = find_peaks(self.intensity, height=rel_height * top)
        return self.energy[idx], self.intensity[idx]


def residual_time(model, amps):
    """i d(t0, t^i, t^ij)/dtau in energy units, for the creation-only ansatz."""
    hu, hd = model.h_up, model.h_dn
    hud, hdd = model.h_ud, model.h_dd
    tu = np.asarray(amps.t_up)
    tuu = np.asarray(amps.t_uu)
    r0 = model.h0 + hd @ tu + 0.5 * np.sum(hdd * tuu) + 0.5 * (tu @ hdd @ tu)
    r_up = hu + hud @ tu + (tu @ hdd) @ tuu + hd @ tuu
    X = hud @ tuu
    r_uu = tuu.T @ hdd @ tuu + X + X.T + model.h_uu
    return r0, r_up, r_uu


def max_frequency(model):
    """Upper bound on the normal-mode energies of the surface, in cm^-1."""
    bound = np.linalg.norm(model.h_ud, 2) + np.linalg.norm(model.h_uu, 2)
    return float(max(bound, np.max(model.omega)))


def max_stable_dtau(model, fraction=0.1):
    return fraction / (TWO_PI_C * max_frequency(model))


def default_dtau(model):
    # RK4 phase error per step ~ (w dt)^5 / 120; 0.02 keeps 1 ps below 1e-6
    return max_stable_dtau(model, 0.02)


def propagate_time(model, tau_max, dtau=None):
    """ACF on the uniform grid 0, dtau, ..., tau_max (fs).

    The constant h0 only contributes the phase exp(-i 2 pi c h0 tau), which is
    applied analytically; the remaining equations are integrated with RK4.
    """
    if tau_max <= 0:
        raise ValueError("tau_max must be positive")
    limit = max_stable_dtau(model)
    if dtau is None:
        dtau = default_dtau(model)
    if dtau <= 0:
        raise ValueError("dtau must be positive")
    if dtau > limit:
        raise NyquistError(f"dtau={dtau:.4g} fs does not resolve the fastest mode; use dtau <= {limit:.4g} fs",
                           required_dtau=limit)
    N = model.N
    n = n_steps_for(tau_max, dtau)
    h = tau_max / n
    t0, final, bad = kernels.time_rk4(*kernels.tensor_args(model), TWO_PI_C, h, n, ACF_TOL)
    tau = np.arange(n + 1) * h
    if bad >= 0:
        raise StepUnstable(f"|ACF| exceeded 1 at tau={tau[bad]:.6g} fs; reduce dtau", block="t0", x=float(tau[bad]))
    h0 = model.h0
    acf = np.exp(t0 - 1j * TWO_PI_C * h0 * tau)
    acf[0] = 1.0
    return AcfSeries(tau=tau, acf=acf, meta={"dtau": h, "tau_max": tau_max, "h0": h0,
                                             "band": spectral_band(model),
                                             "t_up": final[1:1 + N], "t_uu": final[1 + N:].reshape(N, N)})


def spectral_band(model, widths=6.0):
    """Energy interval (cm^-1) holding essentially all Franck-Condon intensity."""
    spread = math.sqrt(float(np.sum(np.asarray(model.h_up) ** 2) + 0.5 * np.sum(np.asarray(model.h_uu) ** 2)))
    w = max_frequency(model)
    return model.h0 - widths * spread - 2.0 * w, model.h0 + widths * spread + 2.0 * w


def default_energy_grid(model, damping, n_points=None):
    """Grid covering the spectral band plus ten damping widths on each side."""
    lo, hi = spectral_band(model)
    lo -= 10.0 * damping
    hi += 10.0 * damping
    if n_points is None:
        n_points = int(math.ceil((hi - lo) / (damping / 10.0))) + 1
    return np.linspace(lo, hi, n_points)


def _fourier(signal, dt, E, chunk=2048):
    """Re sum_k signal_k exp(i 2 pi c E tau_k) with tau_k = k dt."""
    n = len(E)
    if n > 2 and np.allclose(np.diff(E), E[1] - E[0], rtol=1e-9, atol=1e-9 * max(1.0, abs(E[1] - E[0]))):
        # uniform grid: chirp-z transform
        a = np.exp(-1j * TWO_PI_C * E[0] * dt)
        w = np.exp(1j * TWO_PI_C * (E[1] - E[0]) * dt)
        return np.real(czt(signal, n, w, a))
    out = np.empty(n)
    tau = dt * np.arange(len(signal))
    chunk = max(1, min(chunk, 2 ** 24 // len(signal)))
    for start in range(0, n, chunk):
        out[start:start + chunk] = np.real(np.exp(1j * TWO_PI_C * np.outer(E[start:start + chunk], tau)) @ signal)
    return out


def compute_spectrum(acf, damping=10.0, grid=None, window=None, chunk=2048):
    """Intensity I(E) = Re sum_k w_k ACF(tau_k) exp(i 2 pi c E tau_k) exp(-2 pi c gamma tau_k) dtau.

    ``damping`` is the Lorentzian half width at half maximum (cm^-1).  The
    optional ``window="cosine"`` multiplies by a half-cosine taper.
    """
    if damping <= 0:
        raise ValueError("damping must be positive")
    if grid is None:
        raise ValueError("an energy grid is required")
    tau = np.asarray(acf.tau, dtype=float)
    values = np.asarray(acf.acf, dtype=complex)
    if len(tau) < 2:
        raise ValueError("ACF needs at least two samples")
    dt = tau[1] - tau[0]
    if not np.allclose(np.diff(tau), dt, rtol=1e-9, atol=0):
        raise ValueError("ACF grid must be uniform")
    grid = np.asarray(grid, dtype=float)
    # remove the carrier at the mean energy; the remaining signal is band limited
    center = float(acf.meta.get("h0", 0.0))
    lo, hi = acf.meta.get("band", (grid.min(), grid.max()))
    reach = max(np.max(np.abs(grid - center)), abs(lo - center), abs(hi - center))
    nyquist = 1.0 / (2.0 * C_CM_PER_FS * dt)
    if reach >= nyquist:
        need = 1.0 / (2.0 * C_CM_PER_FS * reach)
        raise NyquistError(f"energies {reach:.6g} cm^-1 from the centre alias at dtau={dt:.4g} fs; "
                           f"use dtau < {need:.4g} fs", required_dtau=need)
    # keep four samples per shortest period in the band
    stride = max(1, int(nyquist / (4.0 * reach))) if reach > 0 else 1
    tau = tau[::stride]
    values = values[::stride] * np.exp(1j * TWO_PI_C * center * tau)
    dt = dt * stride
    weights = np.full(len(tau), dt)
    weights[0] = weights[-1] = 0.5 * dt
    signal = values * np.exp(-TWO_PI_C * damping * tau) * weights
    if window == "cosine":
        signal = signal * np.cos(0.5 * np.pi * tau / tau[-1])
    elif window is not None:
        raise ValueError(f"unknown window {window!r}")
    out = _fourier(signal, dt, grid - center, chunk)
    top = float(np.max(out)) if len(out) else 0.0
    floor = -1e-6 * top
    clipped = int(np.sum(out < floor))
    out[out < 0.0] = 0.0
    return Spectrum(energy=grid, intensity=out, damping=damping,
                    meta={"window": window, "clipped_below_floor": clipped, "dtau": dt, "stride": stride})
