import numpy as np
import pytest

from isofbp import _accel, kernels
from isofbp.assembly import Discretization, QuadratureGrid
from isofbp.geometry import BoundaryCurve, GeoMap
from isofbp.spline import build_open_space, build_periodic_space

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not available")


def _spans(sp, xs):
    return kernels._find_spans_np(sp.knots, sp._lo, sp._hi, xs)


@pytest.mark.parametrize("periodic", [False, True])
def test_find_spans_numpy(periodic):
    sp = build_periodic_space(11, 3) if periodic else build_open_space(8, 3)
    xs = np.array([0.0, 0.125, 0.5, 0.999, 1.0])
    s = _spans(sp, xs)
    assert np.all(sp.knots[s] <= xs)
    assert np.all((xs < sp.knots[s + 1]) | (xs == 1.0))
    assert s[-1] == sp._hi


@needs_numba
@pytest.mark.parametrize("p", [1, 2, 3, 5])
def test_numba_matches_numpy_basis(p):
    sp = build_open_space(7, p)
    xs = np.random.default_rng(1).random(500)
    xs[:2] = 0.0, 1.0
    s_nb = kernels._find_spans_nb(sp.knots, sp._lo, sp._hi, xs)
    s_np = _spans(sp, xs)
    np.testing.assert_array_equal(s_nb, s_np)
    a = kernels._basis_ders_nb(sp.knots, p, xs, s_np, p)
    b = kernels._basis_ders_np(sp.knots, p, xs, s_np, p)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-11)


@needs_numba
def test_numba_matches_numpy_stiffness():
    disc = Discretization(3, 5, 4, "periodic")
    curve = BoundaryCurve.from_function(disc.space_x, lambda x: 1 + 0.1 * np.sin(2 * np.pi * x))
    grid = QuadratureGrid(disc, GeoMap.from_curve(disc.space_x, disc.space_y, curve))
    args = (grid.bx, grid.by, grid.metric, grid.dofx.astype(np.int64), grid.dofy.astype(np.int64), grid.m)
    r1, c1, v1 = kernels._stiffness_coo_nb(*args)
    r2, c2, v2 = kernels._stiffness_coo_np(*args)
    np.testing.assert_array_equal(r1, r2)
    np.testing.assert_array_equal(c1, c2)
    np.testing.assert_allclose(v1, v2, rtol=1e-12, atol=1e-14)


def test_backend_switch(monkeypatch):
    sp = build_open_space(6, 3)
    xs = np.linspace(0, 1, 33)
    ref = sp.collocation_matrix(xs, 2)
    monkeypatch.setattr(_accel, "USE_NUMBA", False)
    np.testing.assert_allclose(sp.collocation_matrix(xs, 2), ref, atol=1e-10)
    assert _accel.backend() == "numpy"
