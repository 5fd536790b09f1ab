"""Thermal normal-ordered exponential propagation for model Hamiltonians."""

__version__ = "0.1.0"

from .kernels import BACKEND
from .model import (BosonQuadraticModel, ContractionScheme, OneBodyFermionModel, VerticalSurfaceSpec,
                    assemble_excited_surface, load_model, save_model)
from .fermion import propagate_fermion
from .boson import init_from_states, propagate_boson, residual_boson, run_thermal
from .fctime import compute_spectrum, propagate_time, residual_time

__all__ = [
    "BACKEND",
    "BosonQuadraticModel",
    "ContractionScheme",
    "OneBodyFermionModel",
    "VerticalSurfaceSpec",
    "assemble_excited_surface",
    "compute_spectrum",
    "init_from_states",
    "load_model",
    "propagate_boson",
    "propagate_fermion",
    "propagate_time",
    "residual_boson",
    "residual_time",
    "run_thermal",
    "save_model",
]
