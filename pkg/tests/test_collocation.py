import numpy as np
import pytest

from isofbp import benchmarks as bm
from isofbp.assembly import Discretization, ProblemData, solve_system
from isofbp.collocation import (_physical_derivs, assemble_collocated, collocated_boundary_update,
                                collocation_points, csp_points)
from isofbp.errors import UnsupportedStrategyError
from isofbp.geometry import BoundaryCurve, GeoMap
from isofbp.spline import build_open_space, greville_points


def const_problem(bc_kind="dirichlet", g=1.0):
    return ProblemData(
        f=lambda x, y: 0 * x,
        g=lambda x, y: g + 0 * x,
        grad_g=lambda x, y: np.zeros(np.broadcast(x, y).shape + (2,)),
        h_fixed=lambda x, y: np.asarray(y, float) + 0 * x,
        h0=1.0, bc_kind=bc_kind)


def setup(top, degree=3, n=5, bc_kind="dirichlet"):
    disc = Discretization(degree, n, n, bc_kind)
    curve = BoundaryCurve.from_function(disc.space_x, top)
    return disc, curve, GeoMap.from_curve(disc.space_x, disc.space_y, curve)


def test_point_count_example():
    sx = build_open_space(2, 2)
    sy = build_open_space(2, 2)
    pts = collocation_points("greville", sx, sy, "dirichlet")
    assert sx.dim == sy.dim == 4
    # 2 x 2 interior (top row excluded) + 2 top + 2 x 3 lateral
    assert len(pts.interior_points) == 4
    assert len(pts.top_boundary_points) == 2
    assert len(pts.lateral_points) == 6
    assert pts.size == 12


@pytest.mark.parametrize("degree", [2, 3, 4, 5])
@pytest.mark.parametrize("bc_kind", ["dirichlet", "periodic"])
def test_point_count_matches_free_dofs(degree, bc_kind):
    disc = Discretization(degree, 6, 5, bc_kind)
    strategies = ["greville"] + (["csp"] if degree == 3 else [])
    for strategy in strategies:
        pts = collocation_points(strategy, disc.space_x, disc.space_y, bc_kind)
        assert pts.size == disc.n_dofs - disc.space_x.dim
        assert pts.interior_points[:, 1].min() > 0
        if len(pts.lateral_points):
            assert pts.lateral_points[:, 1].min() > 0


def test_csp_rejects_even_degree():
    with pytest.raises(UnsupportedStrategyError):
        csp_points(build_open_space(4, 2))
    with pytest.raises(UnsupportedStrategyError):
        collocation_points("csp", build_open_space(4, 4), build_open_space(4, 4), "dirichlet")
    with pytest.raises(UnsupportedStrategyError):
        collocation_points("nope", build_open_space(4, 3), build_open_space(4, 3), "dirichlet")


def test_csp_points_are_distinct_and_inside():
    sp = build_open_space(8, 3)
    pts = csp_points(sp)
    assert pts.size == sp.dim
    assert pts[0] == 0 and pts[-1] == 1
    assert np.all(np.diff(pts) > 0)


def test_flat_geometry_points_are_parametric():
    disc, _, geo = setup(lambda x: np.ones_like(x), degree=2, n=4)
    pts = collocation_points("greville", disc.space_x, disc.space_y, "dirichlet")
    phys, _, _ = geo.evaluate(pts.interior_points[:, 0], pts.interior_points[:, 1])
    np.testing.assert_allclose(phys, pts.interior_points, atol=1e-15)


@pytest.mark.parametrize("degree", [2, 3, 4])
def test_laplacian_of_quadratic_on_flat_geometry(degree):
    disc, _, geo = setup(lambda x: np.ones_like(x), degree=degree, n=4)
    sx, sy = disc.space_x, disc.space_y
    gx, gy = greville_points(sx), greville_points(sy)
    cx = np.linalg.solve(sx.collocation_matrix(gx), gx**2)
    cy = np.linalg.solve(sy.collocation_matrix(gy), gy**2)
    coeffs = cx[:, None] * np.ones(sy.dim) + np.ones(sx.dim)[:, None] * cy[None, :]  # x^2 + y^2
    xi = np.array([0.13, 0.5, 0.77])
    eta = np.array([0.31, 0.66, 0.91])
    glob, _, _, lap = _physical_derivs(geo, disc, xi, eta)
    np.testing.assert_allclose(np.sum(lap * coeffs.ravel()[glob], axis=1), 4.0, atol=1e-11)


def test_laplacian_on_curved_geometry_matches_fd():
    disc, curve, geo = setup(lambda x: 1 + 0.2 * np.sin(2 * np.pi * x), degree=4, n=6, bc_kind="periodic")
    coeffs = np.cos(np.arange(disc.n_dofs) * 0.7)
    xi, eta = np.array([0.41]), np.array([0.53])
    glob, _, _, lap = _physical_derivs(geo, disc, xi, eta)
    got = np.sum(lap * coeffs[glob], axis=1)[0]

    def u_phys(x, y):
        top = curve.values([x])[0, 0]
        g, val, _, _ = _physical_derivs(geo, disc, np.array([x]), np.array([y / top]))
        return float(np.sum(val * coeffs[g]))

    x0, y0 = geo.evaluate(xi, eta)[0][0]
    h = 1e-4
    fd = (u_phys(x0 + h, y0) + u_phys(x0 - h, y0) + u_phys(x0, y0 + h) + u_phys(x0, y0 - h)
          - 4 * u_phys(x0, y0)) / h**2
    assert abs(got - fd) <= 1e-5 * max(1.0, abs(got))


@pytest.mark.parametrize("bc_kind", ["dirichlet", "periodic"])
@pytest.mark.parametrize("strategy", ["greville", "csp"])
def test_linear_solution_residual(bc_kind, strategy):
    disc, _, geo = setup(lambda x: np.ones_like(x), degree=3, n=6, bc_kind=bc_kind)
    pts = collocation_points(strategy, disc.space_x, disc.space_y, bc_kind)
    system = assemble_collocated(geo, const_problem(bc_kind), disc, pts)
    assert system.matrix.shape[0] == system.matrix.shape[1] == system.free.size
    v = disc.space_y.greville()
    exact = np.tile(v, (disc.shape[0], 1)).ravel()
    assert np.abs(system.matrix @ exact[system.free] - system.rhs).max() <= 1e-12
    u, _ = solve_system(system)
    np.testing.assert_allclose(u, exact, atol=1e-12)


def test_exact_geometry_update_vanishes_test1():
    problem, sol = bm.test1_problem()
    disc, curve, geo = setup(lambda x: 1 + sol.alpha_ex(x), degree=3, n=4)
    pts = collocation_points("greville", disc.space_x, disc.space_y, "dirichlet")
    u, _ = solve_system(assemble_collocated(geo, problem, disc, pts))
    w = collocated_boundary_update(u, curve, problem, pts.top_boundary_points, disc)
    assert np.abs(w).max() <= 1e-9


def test_boundary_update_examples():
    disc, curve, geo = setup(lambda x: np.ones_like(x), degree=3, n=6, bc_kind="periodic")
    tp = collocation_points("greville", disc.space_x, disc.space_y, "periodic").top_boundary_points
    v = disc.space_y.greville()
    u_top_one = np.tile(v / v[-1], (disc.shape[0], 1)).ravel()  # equals h0 = 1 on top
    w = collocated_boundary_update(u_top_one, curve, const_problem("periodic"), tp, disc)
    np.testing.assert_allclose(w, 0.0, atol=1e-14)
    u_zero = np.zeros(disc.n_dofs)  # h0 - u = 1
    w = collocated_boundary_update(u_zero, curve, const_problem("periodic", g=2.0), tp, disc)
    np.testing.assert_allclose(w, 0.5, atol=1e-14)


def test_first_update_pushes_upward():
    problem, _ = bm.test1_problem()
    disc, curve, geo = setup(lambda x: np.ones_like(x), degree=3, n=4)
    pts = collocation_points("greville", disc.space_x, disc.space_y, "dirichlet")
    u, _ = solve_system(assemble_collocated(geo, problem, disc, pts))
    w = collocated_boundary_update(u, curve, problem, pts.top_boundary_points, disc)
    assert disc.space_x.evaluate(w, [0.5])[0, 0] > 0


def test_greville_interpolation_reproduces_space():
    sp = build_open_space(7, 3)
    c = np.sin(np.arange(sp.dim) + 0.2)
    g = greville_points(sp)
    back = np.linalg.solve(sp.collocation_matrix(g), sp.evaluate(c, g)[0])
    np.testing.assert_allclose(back, c, atol=1e-12)
