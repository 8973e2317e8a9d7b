"""Time the numba and numpy variants of the hot kernels side by side.

    python3 benchmarks/bench_kernels.py [--mesh 64] [--repeat 5]

Also times one full solver iteration under the currently selected backend.
"""
import argparse
import time

import numpy as np

from isofbp import _accel, kernels
from isofbp import benchmarks as bm
from isofbp.assembly import Discretization, QuadratureGrid
from isofbp.geometry import BoundaryCurve, GeoMap
from isofbp.solver import SolverConfig, run


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mesh", type=int, default=64)
    ap.add_argument("--degree", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=200_000)
    args = ap.parse_args()

    disc = Discretization(args.degree, args.mesh, args.mesh)
    sx = disc.space_x
    curve = BoundaryCurve.from_function(sx, lambda x: 1 + 0.25 * x * (1 - x))
    geo = GeoMap.from_curve(sx, disc.space_y, curve)
    grid = QuadratureGrid(disc, geo)
    rng = np.random.default_rng(0)
    xs = np.sort(rng.random(args.points))
    spans = kernels._find_spans_np(sx.knots, sx._lo, sx._hi, xs)
    stiff_args = (grid.bx, grid.by, grid.metric, grid.dofx.astype(np.int64),
                  grid.dofy.astype(np.int64), grid.m)

    cases = {
        "find_spans": (lambda: kernels._find_spans_nb(sx.knots, sx._lo, sx._hi, xs),
                       lambda: kernels._find_spans_np(sx.knots, sx._lo, sx._hi, xs)),
        "basis_ders": (lambda: kernels._basis_ders_nb(sx.knots, sx.degree, xs, spans, 2),
                       lambda: kernels._basis_ders_np(sx.knots, sx.degree, xs, spans, 2)),
        "stiffness_coo": (lambda: kernels._stiffness_coo_nb(*stiff_args),
                          lambda: kernels._stiffness_coo_np(*stiff_args)),
    }
    print(f"mesh {args.mesh}x{args.mesh}, p={args.degree}, {args.points} points, numba available: {_accel.HAVE_NUMBA}")
    print(f"{'kernel':<16}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, (nb, npy) in cases.items():
        t_np = best_of(npy, args.repeat)
        if _accel.HAVE_NUMBA:
            nb()  # compile
            t_nb = best_of(nb, args.repeat)
            print(f"{name:<16}{t_nb:12.4e}{t_np:12.4e}{t_np / t_nb:10.2f}")
        else:
            print(f"{name:<16}{'n/a':>12}{t_np:12.4e}{'':>10}")

    problem, _ = bm.test2_problem()
    hist = run(SolverConfig("decoupled", args.degree, (args.mesh, args.mesh), max_iter=2), problem)
    print(f"decoupled iteration ({_accel.backend()} backend): "
          f"{np.mean(hist.column('wall_time')):.4e} s")


if __name__ == "__main__":
    main()
