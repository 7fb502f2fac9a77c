"""Compare the compiled and numpy kernel backends.

Times the two per-cell kernels on random cells and one full fast-solver
run on the baseline scenario, then checks the backends agree.

    python3 benchmarks/bench_kernels.py [--cells 4096] [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from slowfast import kernels
from slowfast.fast_solver import integrate_fast
from slowfast.model import baseline_params
from slowfast.scenario import baseline_scenario


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--t-end", type=float, default=0.02, help="horizon of the solver run")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    p = baseline_params()
    pk = kernels.pack(p)
    u = rng.uniform(0.0, 5.0, args.cells)
    v = rng.uniform(0.0, 5.0, args.cells)
    ub0 = u * rng.uniform(0.0, 1.0, args.cells)

    sc = baseline_scenario()
    sc = type(sc)(**{**sc.__dict__, "solver": type(sc.solver)(**{**sc.solver.__dict__, "t_end": args.t_end})})

    results = {}
    for name in ("cython", "python"):
        impl = kernels.get_backend(name)
        t_root = _best(lambda: impl.manifold_roots(u, v, pk, 1e-12), args.repeat)
        t_stiff = _best(lambda: impl.stiff_ub_solve(u, v, ub0, 1e-3, 1e-4, pk), args.repeat)
        with kernels.use_backend(name):
            t_run = _best(lambda: integrate_fast(sc.fast_state(prepared=False), sc.solver, p,
                                                 monitors=False, dt=sc.solver.dt), max(1, args.repeat // 2))
        results[name] = (t_root, t_stiff, t_run)

    print(f"{'kernel':<28}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}")
    labels = (f"manifold_roots ({args.cells})", f"stiff_ub_solve ({args.cells})",
              f"integrate_fast (T={args.t_end:g})")
    for i, lab in enumerate(labels):
        c, py = results["cython"][i], results["python"][i]
        print(f"{lab:<28}{c:>12.4g}{py:>12.4g}{py / c:>9.1f}x")

    a = kernels.get_backend("cython").manifold_roots(u, v, pk, 1e-12)[0]
    b = kernels.get_backend("python").manifold_roots(u, v, pk, 1e-12)[0]
    print(f"max |ub_cython - ub_python| = {np.max(np.abs(a - b)):.3g}")


if __name__ == "__main__":
    main()
