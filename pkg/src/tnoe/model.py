"""Hamiltonian models, JSON ingestion and normal-ordering bookkeeping.

Bosonic tensors follow a single index convention: an upper index belongs to a
creation operator and a lower index to an annihilation operator, so

    H = h0 + h_up[i] a_i^+ + h_dn[i] a_i + h_ud[i, j] {a_i^+ a_j}
           + 1/2 h_uu[i, j] a_i^+ a_j^+ + 1/2 h_dd[i, j] a_i a_j
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .errors import DimensionMismatch, ModelParseError, ModelValidationError

HERMITIAN_TOL = 1e-12
SYMMETRY_TOL = 1e-12

_UNITS = ("cm-1", "eV", "hartree")


def _freeze(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OneBodyFermionModel:
    M: int
    n_el: int
    h: np.ndarray
    E0: float = 0.0
    units: str = "hartree"

    def __post_init__(self):
        h = np.asarray(self.h)
        if h.dtype.kind not in "fc":
            h = h.astype(float)
        object.__setattr__(self, "h", _freeze(h))
        self.validate()

    def validate(self):
        if int(self.M) != self.M or self.M < 1:
            raise ModelValidationError("M", f"orbital count must be a positive integer, got {self.M}")
        if self.h.shape != (self.M, self.M):
            raise ModelValidationError("h", f"expected shape {(self.M, self.M)}, got {self.h.shape}")
        if not np.all(np.isfinite(self.h)):
            raise ModelValidationError("h", "non-finite entries")
        if np.max(np.abs(self.h - self.h.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ModelValidationError("h", "matrix is not Hermitian")
        if int(self.n_el) != self.n_el or not 0 < self.n_el < self.M:
            raise ModelValidationError("n_el", f"need 0 < n_el < M, got n_el={self.n_el}, M={self.M}")
        if self.units not in _UNITS:
            raise ModelValidationError("units", f"unknown unit {self.units!r}")

    def __eq__(self, other):
        return (
            isinstance(other, OneBodyFermionModel)
            and (self.M, self.n_el, self.E0, self.units) == (other.M, other.n_el, other.E0, other.units)
            and self.h.dtype == other.h.dtype
            and np.array_equal(self.h, other.h)
        )


@dataclass(frozen=True)
class ContractionScheme:
    """Per-orbital (fermion) or uniform (boson) contraction values."""

    f: np.ndarray
    statistics: str = "fermion"

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        object.__setattr__(self, "f", _freeze(f))
        if self.statistics == "fermion":
            if np.any(f < 0.0) or np.any(f > 1.0):
                raise ModelValidationError("f", "fermionic contractions must lie in [0, 1]")
        elif self.statistics == "boson":
            if np.any(f < 0.0):
                raise ModelValidationError("f", "bosonic contraction must be >= 0")
        else:
            raise ValueError(f"unknown statistics {self.statistics!r}")

    @property
    def fbar(self):
        if self.statistics == "fermion":
            return 1.0 - self.f
        return 1.0 + self.f

    @property
    def uniform(self):
        return bool(np.all(self.f == self.f[0]))

    @classmethod
    def uniform_fermion(cls, M, f):
        return cls(np.full(M, float(f)), "fermion")

    @classmethod
    def default_for(cls, model):
        """Uniform filling f = n_el / M."""
        return cls.uniform_fermion(model.M, model.n_el / model.M)

    @classmethod
    def extremal(cls, M, occupied):
        f = np.zeros(M)
        f[list(occupied)] = 1.0
        return cls(f, "fermion")


@dataclass(frozen=True, eq=False)
class BosonQuadraticModel:
    omega: np.ndarray
    h0: float
    h_up: np.ndarray
    h_dn: np.ndarray
    h_ud: np.ndarray
    h_uu: np.ndarray
    h_dd: np.ndarray
    allow_non_hermitian: bool = False
    units: str = "cm-1"

    def __post_init__(self):
        for name in ("omega", "h_up", "h_dn", "h_ud", "h_uu", "h_dd"):
            a = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, _freeze(a))
        object.__setattr__(self, "h0", float(self.h0))
        self.validate()

    @property
    def N(self):
        return self.omega.shape[0]

    def validate(self):
        N = self.N
        if N < 1:
            raise ModelValidationError("omega", "at least one mode required")
        if np.any(self.omega <= 0.0):
            raise ModelValidationError("omega", "frequencies must be positive")
        for name in ("h_up", "h_dn"):
            if getattr(self, name).shape != (N,):
                raise ModelValidationError(name, f"expected shape {(N,)}")
        for name in ("h_ud", "h_uu", "h_dd"):
            if getattr(self, name).shape != (N, N):
                raise ModelValidationError(name, f"expected shape {(N, N)}")
        for name in ("h_uu", "h_dd"):
            a = getattr(self, name)
            if np.max(np.abs(a - a.T)) > SYMMETRY_TOL:
                raise ModelValidationError(name, "must be symmetric")
        if not self.allow_non_hermitian:
            if np.max(np.abs(self.h_up - self.h_dn)) > HERMITIAN_TOL:
                raise ModelValidationError("h_up", "Hermitian model needs h_up == h_dn")
            if np.max(np.abs(self.h_uu - self.h_dd)) > HERMITIAN_TOL:
                raise ModelValidationError("h_uu", "Hermitian model needs h_uu == h_dd")
            if np.max(np.abs(self.h_ud - self.h_ud.T)) > HERMITIAN_TOL:
                raise ModelValidationError("h_ud", "Hermitian model needs symmetric h_ud")

    def h0_at(self, f):
        """Constant part after re-normal-ordering with contraction ``f``.

        The stored tensors are normal ordered with respect to the true vacuum
        (f = 0); only {a^+ a} carries a contraction.
        """
        return self.h0 + f * float(np.trace(self.h_ud))

    def __eq__(self, other):
        if not isinstance(other, BosonQuadraticModel):
            return NotImplemented
        names = ("omega", "h_up", "h_dn", "h_ud", "h_uu", "h_dd")
        return (
            self.h0 == other.h0
            and self.allow_non_hermitian == other.allow_non_hermitian
            and self.units == other.units
            and all(np.array_equal(getattr(self, n), getattr(other, n)) for n in names)
        )


@dataclass(frozen=True, eq=False)
class VerticalSurfaceSpec:
    omega: np.ndarray
    E_vert: float
    kappa: np.ndarray
    Phi: np.ndarray
    units: str = "cm-1"

    def __post_init__(self):
        for name in ("omega", "kappa", "Phi"):
            object.__setattr__(self, name, _freeze(np.asarray(getattr(self, name), dtype=float)))
        object.__setattr__(self, "E_vert", float(self.E_vert))
        N = self.N
        if np.any(self.omega <= 0.0):
            raise ModelValidationError("omega", "frequencies must be positive")
        if self.kappa.shape != (N,):
            raise ModelValidationError("kappa", f"expected shape {(N,)}")
        if self.Phi.shape != (N, N):
            raise ModelValidationError("Phi", f"expected shape {(N, N)}")
        if np.max(np.abs(self.Phi - self.Phi.T)) > SYMMETRY_TOL:
            raise ModelValidationError("Phi", "Hessian must be symmetric")

    @property
    def N(self):
        return self.omega.shape[0]

    def __eq__(self, other):
        if not isinstance(other, VerticalSurfaceSpec):
            return NotImplemented
        return (
            self.E_vert == other.E_vert
            and self.units == other.units
            and all(np.array_equal(getattr(self, n), getattr(other, n)) for n in ("omega", "kappa", "Phi"))
        )


def normal_order_fermion(model, scheme):
    """Return ``(h0, h_dot)`` for a one-body Hamiltonian normal ordered w.r.t. ``scheme``.

    h0 = E0 + sum_p f_p h_pp; the one-body part is unchanged.
    """
    if scheme.f.shape != (model.M,):
        raise DimensionMismatch(f"scheme has {scheme.f.shape[0]} orbitals, model has {model.M}")
    h0 = model.E0 + float(np.real(np.dot(scheme.f, np.diag(model.h))))
    return h0, model.h


def assemble_excited_surface(spec):
    """Second-quantized tensors for a vertical-Hessian harmonic surface.

    With q = (a^+ + a)/sqrt2 and p = i(a^+ - a)/sqrt2 in the ground-state
    dimensionless normal modes,

        H = E_vert + kappa.q + 1/2 q.Phi.q + 1/2 sum_i omega_i p_i^2

    normal ordered against the ground vibrational state (f = 0).
    """
    w = spec.omega
    Phi = spec.Phi
    W = np.diag(w)
    h_single = spec.kappa / math.sqrt(2.0)
    h_pair = 0.5 * (Phi - W)
    return BosonQuadraticModel(
        omega=w,
        h0=spec.E_vert + 0.25 * (np.trace(Phi) + w.sum()),
        h_up=h_single,
        h_dn=h_single.copy(),
        h_ud=0.5 * (Phi + W),
        h_uu=h_pair,
        h_dd=h_pair.copy(),
        units=spec.units,
    )


# ---------------------------------------------------------------------------
# JSON I/O


def _matrix(data, key, complex_ok=False):
    try:
        raw = data[key]
    except KeyError:
        raise ModelParseError(f"missing key {key!r}") from None
    if complex_ok and isinstance(raw, dict):
        re = np.asarray(raw["re"], dtype=float)
        im = np.asarray(raw.get("im", np.zeros_like(re)), dtype=float)
        arr = re + 1j * im
    else:
        try:
            arr = np.asarray(raw, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ModelParseError(f"{key}: {exc}") from None
    if not np.all(np.isfinite(arr)):
        raise ModelValidationError(key, "non-finite entries")
    return arr


def _check_count(data, key, expected):
    if key in data and int(data[key]) != expected:
        raise ModelValidationError(key, f"declared {data[key]} but arrays have size {expected}")


def model_from_dict(data, kind=None):
    kind = kind or data.get("kind")
    file_kind = data.get("kind", kind)
    units = data.get("units", "cm-1" if file_kind in ("boson", "surface") else "hartree")
    if kind == "fermion":
        if file_kind != "fermion":
            raise ModelParseError(f"cannot read a {file_kind!r} file as a fermion model")
        h = _matrix(data, "h", complex_ok=True)
        if h.ndim != 2:
            raise ModelValidationError("h", "must be a matrix")
        _check_count(data, "M", h.shape[0])
        if "n_el" not in data:
            raise ModelParseError("missing key 'n_el'")
        return OneBodyFermionModel(M=h.shape[0], n_el=int(data["n_el"]), h=h,
                                   E0=float(data.get("E0", 0.0)), units=units)
    if kind in ("surface", "boson") and file_kind == "surface":
        omega = _matrix(data, "omega")
        _check_count(data, "N", omega.shape[0])
        spec = VerticalSurfaceSpec(omega=omega, E_vert=float(data.get("E_vert", 0.0)),
                                   kappa=_matrix(data, "kappa"), Phi=_matrix(data, "Phi"), units=units)
        return spec if kind == "surface" else assemble_excited_surface(spec)
    if kind == "boson" and file_kind == "boson":
        omega = _matrix(data, "omega")
        _check_count(data, "N", omega.shape[0])
        return BosonQuadraticModel(
            omega=omega, h0=float(data.get("h0", 0.0)),
            h_up=_matrix(data, "h_up"), h_dn=_matrix(data, "h_dn"), h_ud=_matrix(data, "h_ud"),
            h_uu=_matrix(data, "h_uu"), h_dd=_matrix(data, "h_dd"),
            allow_non_hermitian=bool(data.get("allow_non_hermitian", False)), units=units)
    raise ModelParseError(f"cannot read a {file_kind!r} file as kind {kind!r}")


def model_to_dict(model):
    if isinstance(model, OneBodyFermionModel):
        if np.iscomplexobj(model.h):
            h = {"re": model.h.real.tolist(), "im": model.h.imag.tolist()}
        else:
            h = model.h.tolist()
        return {"kind": "fermion", "units": model.units, "M": model.M, "n_el": model.n_el,
                "E0": model.E0, "h": h}
    if isinstance(model, VerticalSurfaceSpec):
        return {"kind": "surface", "units": model.units, "N": model.N, "omega": model.omega.tolist(),
                "E_vert": model.E_vert, "kappa": model.kappa.tolist(), "Phi": model.Phi.tolist()}
    if isinstance(model, BosonQuadraticModel):
        out = {"kind": "boson", "units": model.units, "N": model.N, "omega": model.omega.tolist(),
               "h0": model.h0}
        for name in ("h_up", "h_dn", "h_ud", "h_uu", "h_dd"):
            out[name] = getattr(model, name).tolist()
        if model.allow_non_hermitian:
            out["allow_non_hermitian"] = True
        return out
    raise TypeError(f"not a model: {type(model).__name__}")


def load_model(path, kind=None):
    """Read and validate a JSON model file.

    ``kind`` may be ``"fermion"``, ``"boson"`` or ``"surface"``; a surface file
    read as ``"boson"`` is assembled into its second-quantized tensors.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ModelParseError(f"{path}: top level must be an object")
    return model_from_dict(data, kind)


def save_model(model, path):
    # json writes floats with repr(), which round-trips doubles exactly
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
