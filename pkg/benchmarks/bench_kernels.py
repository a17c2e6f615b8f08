"""Time the compiled and pure-numpy time-stepping kernels on the four-level benchmark.

Run with ``python3 benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import time

import numpy as np

from quasistat import _kernels_py
from quasistat._backend import BACKEND
from quasistat.dynamics import memory_kernel
from quasistat.lindblad import scenario_generators, vec
from quasistat.model import four_level_scenario
from quasistat.steady import block_structure

try:
    from quasistat import _kernels as _compiled
except ImportError:
    _compiled = None


def _best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    sc = four_level_scenario()
    g = scenario_generators(sc)
    d = sc.atom.dim
    l0 = np.ascontiguousarray(g.free + sc.lam ** 2 * g.reservoir)
    lp = np.ascontiguousarray(g.pump, dtype=complex)
    y0 = vec(sc.initial_state()).astype(complex)
    dt = sc.default_dt()
    nsteps = int(round(180.0 / dt))

    bs = block_structure(sc.atom)
    a = np.ascontiguousarray(sc.lam ** 2 * bs.restrict(g.reservoir))
    n_mem = 4000
    kernel, _ = memory_kernel(sc, dt, n_mem + 1)
    c0 = bs.to_coords(sc.initial_state())

    backends = [("python", _kernels_py)] + ([("compiled", _compiled)] if _compiled else [])
    print(f"active backend: {BACKEND}")
    results = {}
    for name, mod in backends:
        t_rk4, y_rk4 = _best_of(lambda: np.asarray(mod.rk4_propagate(
            l0, lp, y0, 0.0, dt, nsteps, sc.omega, sc.eta, np.inf, d)))
        t_mem, y_mem = _best_of(lambda: np.asarray(mod.memory_propagate(a, kernel, c0, dt, n_mem)))
        results[name] = (y_rk4, y_mem)
        print(f"{name:>8}: rk4 {nsteps} steps {t_rk4 * 1e3:8.1f} ms | "
              f"memory {n_mem} steps {t_mem * 1e3:8.1f} ms")
    if len(results) == 2:
        dr = np.max(np.abs(results["python"][0] - results["compiled"][0]))
        dm = np.max(np.abs(results["python"][1] - results["compiled"][1]))
        print(f"max backend difference: rk4 {dr:.2e}, memory {dm:.2e}")


if __name__ == "__main__":
    main()
