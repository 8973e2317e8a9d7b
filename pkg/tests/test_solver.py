import numpy as np
import pytest

from isofbp import benchmarks as bm
from isofbp.assembly import Discretization
from isofbp.geometry import BoundaryCurve, GeoMap
from isofbp.solver import (ALGORITHMS, CSV_HEADER, SolverConfig, dirichlet_error, read_history_csv, run,
                           surface_error, update_boundary, update_norm)
from isofbp.spline import build_open_space, build_periodic_space


def flat_curve(space, level=1.0):
    return BoundaryCurve.from_function(space, lambda x: level + 0 * x)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(algorithm="newton")
    with pytest.raises(ValueError):
        SolverConfig(tol=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    assert SolverConfig(mesh=4).mesh == (4, 4)


def test_surface_error_examples():
    sp = build_open_space(8, 3)
    flat = flat_curve(sp)
    _, s1 = bm.test1_problem()
    _, s2 = bm.test2_problem()
    assert abs(surface_error(flat, s1.alpha_ex) - np.sqrt(1 / 480)) <= 1e-12
    assert abs(surface_error(flat, s2.alpha_ex) - 1 / (16 * np.sqrt(2))) <= 1e-6
    exact = BoundaryCurve.from_function(build_open_space(3, 2), lambda x: 1 + s1.alpha_ex(x))
    assert surface_error(exact, s1.alpha_ex) <= 1e-14


def test_dirichlet_error_examples():
    disc = Discretization(2, 3, 3)
    geo = GeoMap.from_curve(disc.space_x, disc.space_y, flat_curve(disc.space_x))
    v = disc.space_y.greville()
    u = np.tile(v, (disc.shape[0], 1))  # u = y, equal to h0 = 1 on top
    assert dirichlet_error(u.ravel(), geo, 1.0) <= 1e-14
    assert abs(dirichlet_error((u + 0.3).ravel(), geo, 1.0) - 0.3) <= 1e-14


def test_update_boundary_examples():
    sp = build_periodic_space(9, 3)
    curve = flat_curve(sp)
    assert update_boundary(curve, np.zeros(sp.dim)) is curve
    moved = update_boundary(curve, 0.1 * np.ones(sp.dim))
    np.testing.assert_allclose(moved.y_coeffs, 1.1, atol=1e-13)
    assert abs(update_norm(curve, np.full(sp.dim, 0.1)) - 0.1) < 1e-14
    # Dirichlet sides: the end heights never move
    op = build_open_space(5, 2)
    moved = update_boundary(flat_curve(op), np.r_[0, np.ones(op.dim - 2), 0])
    assert moved.y_coeffs[0] == 1.0 and moved.y_coeffs[-1] == 1.0


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_fixed_point_terminates_in_one_iteration(algorithm):
    problem, sol = bm.test1_problem()
    cfg = SolverConfig(algorithm, 2, (4, 4), tol=1e-9, initial_boundary=lambda x: 1 + sol.alpha_ex(x))
    hist = run(cfg, problem)
    assert hist.status == "converged" and hist.iterations == 1
    assert hist.final.update_norm <= 1e-9


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_monotone_tail_test1(algorithm):
    problem, _ = bm.test1_problem()
    hist = run(SolverConfig(algorithm, 2, (8, 8), tol=1e-12, max_iter=20), problem)
    d = hist.column("dirichlet_error")
    hit = np.flatnonzero(d <= 1e-12)
    tail = d[: hit[0] + 1] if hit.size else d
    assert np.all(np.diff(tail[-3:]) < 0)


def test_max_iter_and_csv_round_trip(tmp_path):
    problem, _ = bm.test2_problem()
    hist = run(SolverConfig("decoupled", 3, (4, 4), max_iter=2), problem)
    assert hist.status == "max-iter" and hist.iterations == 2
    path = tmp_path / "h.csv"
    hist.to_csv(path)
    text = path.read_text().splitlines()
    assert text[0] == ",".join(CSV_HEADER)
    mantissa = text[1].split(",")[1].split("e")[0]
    assert len(mantissa.replace(".", "").lstrip("-")) >= 12
    data = read_history_csv(path)
    np.testing.assert_array_equal(data["surface_error"], hist.column("surface_error"))
    np.testing.assert_array_equal(data["iter"], [1, 2])


def test_failure_is_reported():
    problem, _ = bm.test1_problem()
    hist = run(SolverConfig("coupled", 2, (2, 2), initial_boundary=lambda x: x - 0.5), problem)
    assert hist.status == "failed"
    assert "initial boundary" in hist.message


def test_periodic_seam_of_converged_boundary():
    problem, _ = bm.test3_problem()
    hist = run(SolverConfig("decoupled", 3, (8, 8)), problem)
    assert hist.status in ("converged", "plateau")
    curve = hist.geometry.top_curve
    a, b = curve.values([0.0], 2)[:, 0], curve.values([1.0], 2)[:, 0]
    np.testing.assert_allclose(a, b, atol=1e-9)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_perturbed_start_reaches_same_boundary(k):
    problem, _ = bm.PROBLEMS[k]()
    degree = 2 if k == 1 else 3
    for alg in ALGORITHMS:
        a = run(SolverConfig(alg, degree, (8, 8)), problem)
        b = run(SolverConfig(alg, degree, (8, 8), initial_boundary=lambda x: 1 + 0.02 * x * (1 - x)), problem)
        assert a.status == b.status == "converged", (alg, a.message, b.message)
        ca, cb = a.geometry.top_curve, b.geometry.top_curve
        diff = surface_error(ca, lambda x: cb.values(x)[0] - 1.0)
        size = surface_error(ca, lambda x: -1.0 + 0 * x)
        assert diff <= 0.01 * size


@pytest.mark.parametrize("k", [2, 3])
def test_csp_improves_collocation_order(k):
    problem, _ = bm.PROBLEMS[k]()
    errs = {}
    for strategy in ("greville", "csp"):
        hists = [run(SolverConfig("collocation", 3, (n, n), point_strategy=strategy), problem) for n in (8, 16)]
        errs[strategy] = [h.final.surface_error for h in hists]
        if strategy == "csp":
            g = run(SolverConfig("collocation", 3, (16, 16)), problem).geometry.top_curve
            c = hists[1].geometry.top_curve
            diff = surface_error(g, lambda x: c.values(x)[0] - 1.0)
            assert diff <= 0.1 * surface_error(g, lambda x: -1.0 + 0 * x)
    rate = {s: np.log2(e[0] / e[1]) for s, e in errs.items()}
    assert rate["csp"] > rate["greville"] + 0.5
    assert errs["csp"][1] < errs["greville"][1]
