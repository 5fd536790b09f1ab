"""Compare the compiled kernels with the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from tnoe import _kernels_py
from tnoe.boson import init_from_states, layout_for
from tnoe.cli import find_model
from tnoe.constants import TWO_PI_C
from tnoe.model import load_model
from tnoe.oracle import boson_sos
from tnoe.kernels import tensor_args

try:
    from tnoe import _kernels as compiled
except ImportError:
    compiled = None


def cases():
    model = load_model(find_model("2mode_coupled.json"), "boson")
    tensors = tensor_args(model)
    y0 = layout_for(2).flatten(init_from_states(boson_sos(model, [60.0], n_states=3).densities(0)).as_dict())
    rng = np.random.default_rng(0)
    A = rng.normal(size=(40, 40)) + 1j * rng.normal(size=(40, 40))
    A = np.ascontiguousarray(A + A.conj().T)
    caps = np.array([20, 20], dtype=np.int64)

    def jacobi(mod):
        mod.jacobi_sweeps(A.copy(), np.eye(40, dtype=complex), 1e-14, 60)

    return {
        "boson_rk4 (2 modes, 2000 steps)":
            lambda mod: mod.boson_rk4(y0, model.h0, *tensors, 0.0, -1e-5, 2000),
        "time_rk4 (2 modes, 2000 steps)":
            lambda mod: mod.time_rk4(*tensors, TWO_PI_C, 0.01, 2000, 1e-4),
        "boson_matrix (21 x 21 quanta)":
            lambda mod: mod.boson_matrix(model.h0, *tensors, caps),
        "jacobi_sweeps (40 x 40 complex)": jacobi,
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if compiled is None:
        print("compiled extension not built; run: python3 setup.py build_ext --inplace")
        return
    print(f"{'kernel':<36} {'cython (ms)':>12} {'python (ms)':>12} {'speed-up':>9}")
    for name, fn in cases().items():
        t = [min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) * 1e3
             for mod in (compiled, _kernels_py)]
        print(f"{name:<36} {t[0]:>12.2f} {t[1]:>12.2f} {t[1] / t[0]:>8.1f}x")


if __name__ == "__main__":
    main()
