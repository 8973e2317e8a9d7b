"""Command-line driver for the benchmark problems.

Example::

    isofbp --test 2 --algorithm all --degree 3 --mesh 8,16,32 --out results --svg
"""
import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import benchmarks
from .geometry import dump_geometry
from .solver import ALGORITHMS, SolverConfig, run
from .svg import log_plot

log = logging.getLogger("isofbp")

SUMMARY_HEADER = ["test", "algorithm", "degree", "mesh", "points", "status", "iterations",
                  "dirichlet_error", "surface_error", "update_norm", "wall_time_s",
                  "time_per_iter_s", "message"]


def _mesh_list(text):
    try:
        sizes = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"mesh must be a comma list of integers, got {text!r}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("mesh sizes must be positive and nonempty")
    return sizes


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("value must be positive")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("value must be >= 1")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="isofbp",
                                 description="Isogeometric quasi-Newton solvers for Bernoulli free boundary benchmarks.")
    ap.add_argument("--test", type=int, choices=(1, 2, 3), required=True, help="benchmark problem")
    ap.add_argument("--algorithm", choices=ALGORITHMS + ("all",), default="all")
    ap.add_argument("--degree", type=int, default=3)
    ap.add_argument("--mesh", type=_mesh_list, default=[8], help="comma list of n for n x n meshes")
    ap.add_argument("--tol", type=_positive_float, default=1e-10)
    ap.add_argument("--max-iter", type=_positive_int, default=50)
    ap.add_argument("--points", choices=("greville", "csp"), default="greville",
                    help="collocation point strategy")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--svg", action="store_true", help="write log-scale convergence plots")
    ap.add_argument("--dump-geometry", action="store_true", help="write final geometry snapshots")
    ap.add_argument("--jobs", type=_positive_int, default=1, help="parallel independent runs")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _solve(test, config):
    problem, _ = benchmarks.PROBLEMS[test]()
    return run(config, problem)


def _stem(test, alg, mesh):
    return f"test{test}_{alg}_{mesh}"


def _summary_row(test, cfg, hist):
    last = hist.final
    wall = sum(r.wall_time for r in hist.records)
    n = hist.iterations
    errs = ([last.dirichlet_error, last.surface_error, last.update_norm] if last
            else [float("nan")] * 3)
    return [test, cfg.algorithm, cfg.degree, cfg.mesh[0], cfg.point_strategy, hist.status, n,
            *(f"{v:.16e}" for v in errs), f"{wall:.6e}", f"{wall / n if n else float('nan'):.6e}",
            hist.message]


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")

    algs = ALGORITHMS if args.algorithm == "all" else (args.algorithm,)
    try:
        configs = [SolverConfig(algorithm=a, degree=args.degree, mesh=(n, n), tol=args.tol,
                                max_iter=args.max_iter, point_strategy=args.points)
                   for a in algs for n in args.mesh]
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"isofbp: error: {exc}", file=sys.stderr)
        return 2
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        print(f"isofbp: cannot create output directory {args.out}: {exc}", file=sys.stderr)
        return 2

    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            histories = list(pool.map(_solve, [args.test] * len(configs), configs))
    else:
        histories = [_solve(args.test, c) for c in configs]

    rows, failed = [], []
    for cfg, hist in zip(configs, histories):
        stem = _stem(args.test, cfg.algorithm, cfg.mesh[0])
        hist.to_csv(os.path.join(args.out, stem + ".csv"))
        if args.svg and hist.records:
            its = list(hist.column("iter"))
            log_plot({name: (its, list(hist.column(name)))
                      for name in ("dirichlet_error", "surface_error", "update_norm")},
                     os.path.join(args.out, stem + ".svg"),
                     title=f"test {args.test}, {cfg.algorithm}, p={cfg.degree}, {cfg.mesh[0]}x{cfg.mesh[1]}")
        if args.dump_geometry and hist.geometry is not None:
            dump_geometry(hist.geometry, os.path.join(args.out, stem + ".geo.txt"))
        rows.append(_summary_row(args.test, cfg, hist))
        final = hist.final
        log.info("%-12s mesh %3d  %-9s iters %2d  surface %.3e  dirichlet %.3e",
                 cfg.algorithm, cfg.mesh[0], hist.status, hist.iterations,
                 final.surface_error if final else float("nan"),
                 final.dirichlet_error if final else float("nan"))
        if hist.status not in ("converged", "plateau"):
            failed.append((cfg, hist))

    with open(os.path.join(args.out, "summary.csv"), "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        writer.writerows(rows)

    if args.svg:
        for alg in algs:
            series = {f"{c.mesh[0]}x{c.mesh[1]}": (list(h.column("iter")), list(h.column("surface_error")))
                      for c, h in zip(configs, histories) if c.algorithm == alg and h.records}
            if series:
                log_plot(series, os.path.join(args.out, f"test{args.test}_{alg}_surface.svg"),
                         title=f"test {args.test}, {alg}: surface error", ylabel="surface error")

    for cfg, hist in failed:
        print(f"isofbp: run failed: test {args.test} algorithm {cfg.algorithm} degree {cfg.degree} "
              f"mesh {cfg.mesh[0]}x{cfg.mesh[1]} status {hist.status}: {hist.message or 'no convergence'}",
              file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
