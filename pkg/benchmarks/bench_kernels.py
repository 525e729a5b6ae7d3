"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--n 2048] [--repeat 20]

Prints one line per kernel with the best time of each backend, the speed-up
and the largest difference between the two results.
"""
import argparse
import timeit

import numpy as np

from dislocwave import kernels
from dislocwave.continuum import FieldState, ModelParams, pde_rhs
from dislocwave.numerics import Grid1D, stencil
from dislocwave.solutions import KinkParams, kink_state


def cases(n: int):
    g = Grid1D(-30.0, 30.0, n)
    s = kink_state(g, 0.0, KinkParams(0.5))
    p = ModelParams.integrable_sector(1.0, 1.0)
    st = stencil(3)
    q = -0.5 * s.ux.astype(complex)
    r = -q
    return {
        "apply_stencil": lambda: kernels.apply_stencil(s.u, st.center, st.left, st.right),
        "apply_reflected": lambda: kernels.apply_reflected(s.u, st.center),
        "corrected_cumtrapz": lambda: kernels.corrected_cumtrapz(np.sin(s.u), s.ux, g.dx),
        "pde_rhs": lambda: pde_rhs(FieldState(s.u, g, 0.0), p),
        "gauge0_sweep": lambda: kernels.gauge0_sweep(q, r, 1j, g.dx)[0],
    }


def run(n: int, repeat: int) -> list:
    rows = []
    for name in cases(n):
        best, out = {}, {}
        for backend in ("python", "cython"):
            kernels.use_backend(backend)
            fn = cases(n)[name]
            out[backend] = np.asarray(fn())
            best[backend] = min(timeit.repeat(fn, number=1, repeat=repeat))
        diff = float(np.max(np.abs(out["python"] - out["cython"])))
        rows.append((name, best["python"], best["cython"], best["python"] / best["cython"], diff))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    try:
        kernels.use_backend("cython")
    except ImportError:
        raise SystemExit("compiled backend not built; run `pip install --no-build-isolation -e .`")
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':20s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speed-up':>9s} {'max diff':>10s}")
    for name, tp, tc, ratio, diff in run(args.n, args.repeat):
        print(f"{name:20s} {1e3 * tp:12.3f} {1e3 * tc:12.3f} {ratio:9.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
