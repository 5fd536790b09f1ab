"""Kernel dispatch: the compiled extension when it was built, else pure Python.

Set ``TNOE_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
if os.environ.get("TNOE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

jacobi_sweeps = _impl.jacobi_sweeps
boson_matrix = _impl.boson_matrix
boson_rhs = _impl.boson_rhs
boson_rk4 = _impl.boson_rk4
time_rk4 = _impl.time_rk4


def tensor_args(model):
    """Writable C-contiguous copies of (h_up, h_dn, h_ud, h_uu, h_dd) for the kernels."""
    return tuple(np.array(getattr(model, name), dtype=float, order="C")
                 for name in ("h_up", "h_dn", "h_ud", "h_uu", "h_dd"))
