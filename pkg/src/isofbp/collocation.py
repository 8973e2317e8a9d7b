"""Collocation of the strong form: interior Poisson rows, a Robin-like row
on the free boundary, strong Dirichlet data, and the collocated update."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import DiscreteSystem, kh_coefficient
from .errors import DataError, NumericalError, UnsupportedStrategyError
from .spline import greville_points

# Galerkin superconvergent abscissae for the second derivative on the
# reference element [-1, 1], odd degrees only.
CSP_TABLE = {
    3: np.array([-1.0, 1.0]) / np.sqrt(3.0),
}


@dataclass(frozen=True)
class CollocationPointSet:
    strategy: str
    interior_points: np.ndarray      # (n, 2) parametric pairs
    top_boundary_points: np.ndarray  # (n_top,) abscissae on eta = 1
    lateral_points: np.ndarray       # (n_lat, 2); empty for periodic sides

    @property
    def size(self):
        return len(self.interior_points) + len(self.top_boundary_points) + len(self.lateral_points)


def csp_points(space):
    """Clustered superconvergent abscissae, one per degree of freedom.

    Candidates are the superconvergent points of every element. Open spaces
    keep ``dim`` of them (including both ends 0 and 1 as Dirichlet sites)
    picked evenly along the sorted candidates; periodic spaces take the left
    candidate of every element (a uniform shift keeps periodic interpolation
    nonsingular, which alternating picks do not on even meshes).
    """
    p = space.degree
    if p % 2 == 0:
        raise UnsupportedStrategyError(f"csp points are only defined for odd degree, got p={p}")
    if p not in CSP_TABLE:
        raise UnsupportedStrategyError(f"no csp table for degree {p}")
    ref = CSP_TABLE[p]
    a, b = space.breaks[:-1, None], space.breaks[1:, None]
    cand = (0.5 * (a + b) + 0.5 * (b - a) * ref[None, :])  # (nel, k)
    if space.periodic:
        return cand[:, 0].copy()
    flat = np.sort(cand.ravel())
    need = space.dim - 2
    if need > flat.size:
        raise UnsupportedStrategyError("mesh too coarse for csp points")
    idx = np.unique(np.rint(np.linspace(0, flat.size - 1, need)).astype(int))
    if idx.size != need:
        raise UnsupportedStrategyError("could not select distinct csp points")
    return np.concatenate([[0.0], flat[idx], [1.0]])


def _univariate(strategy, space):
    if strategy == "greville":
        return greville_points(space)
    if strategy == "csp":
        return csp_points(space)
    raise UnsupportedStrategyError(f"unknown collocation strategy {strategy!r}")


def collocation_points(strategy, space_x, space_y, bc_kind):
    if space_x.degree < 2 or space_y.degree < 2:
        raise ValueError("collocation needs degree >= 2")
    xs = _univariate(strategy, space_x)
    ys = _univariate(strategy, space_y)
    x_in = xs if bc_kind == "periodic" else xs[1:-1]
    y_in = ys[1:-1]
    X, Y = np.meshgrid(x_in, y_in, indexing="ij")
    interior = np.column_stack([X.ravel(), Y.ravel()])
    if bc_kind == "periodic":
        lateral = np.zeros((0, 2))
    else:
        up = ys[1:]
        lateral = np.concatenate([np.column_stack([np.zeros_like(up), up]),
                                  np.column_stack([np.ones_like(up), up])])
    pts = CollocationPointSet(strategy, interior, x_in.copy(), lateral)
    expected = space_x.dim * (space_y.dim - 1)
    if pts.size != expected:
        raise RuntimeError(f"collocation point count {pts.size} != free dofs {expected}")
    return pts


def _tensor_rows(disc, xi, eta, nd):
    """Local dofs and tensor basis derivative tables at paired points."""
    sx, sy = disc.space_x, disc.space_y
    fx, vx = sx.basis_ders(xi, nd)
    fy, vy = sy.basis_ders(eta, nd)
    dx = sx.local_dofs(fx)
    dy = sy.local_dofs(fy)
    glob = (dx[:, :, None] * sy.dim + dy[:, None, :]).reshape(xi.size, -1)
    return glob, vx, vy


def _physical_derivs(geo, disc, xi, eta):
    """Values, physical gradients and Laplacians of the local tensor functions."""
    glob, vx, vy = _tensor_rows(disc, xi, eta, 2)
    _, jac, hess = geo.evaluate(xi, eta, 2)
    n = xi.size
    val = np.einsum("na,nb->nab", vx[:, 0], vy[:, 0]).reshape(n, -1)
    d_xi = np.einsum("na,nb->nab", vx[:, 1], vy[:, 0]).reshape(n, -1)
    d_eta = np.einsum("na,nb->nab", vx[:, 0], vy[:, 1]).reshape(n, -1)
    h_xx = np.einsum("na,nb->nab", vx[:, 2], vy[:, 0]).reshape(n, -1)
    h_xe = np.einsum("na,nb->nab", vx[:, 1], vy[:, 1]).reshape(n, -1)
    h_ee = np.einsum("na,nb->nab", vx[:, 0], vy[:, 2]).reshape(n, -1)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if det.min() <= 1e-14:
        raise NumericalError("nonpositive Jacobian at a collocation point")
    inv = np.empty_like(jac)  # inv[:, a, k] = d xi_a / d x_k
    inv[:, 0, 0] = jac[:, 1, 1] / det
    inv[:, 1, 1] = jac[:, 0, 0] / det
    inv[:, 0, 1] = -jac[:, 0, 1] / det
    inv[:, 1, 0] = -jac[:, 1, 0] / det
    grad_ref = np.stack([d_xi, d_eta], axis=1)                   # (n, a, loc)
    grad = np.einsum("nak,nal->nkl", inv, grad_ref)             # (n, k, loc)
    hess_ref = np.stack([np.stack([h_xx, h_xe], 1), np.stack([h_xe, h_ee], 1)], 1)  # (n, a, b, loc)
    corr = np.einsum("nkab,nkl->nabl", hess, grad)
    G = np.einsum("nak,nbk->nab", inv, inv)
    lap = np.einsum("nab,nabl->nl", G, hess_ref - corr)
    return glob, val, grad, lap


def assemble_collocated(geo, problem, disc, points):
    """Square collocation system over all dofs above the bottom row."""
    n_dofs = disc.n_dofs
    rows, cols, vals, rhs = [], [], [], []
    r0 = 0

    def add(glob, coef, b):
        nonlocal r0
        n = glob.shape[0]
        rows.append(np.repeat(np.arange(r0, r0 + n), glob.shape[1]))
        cols.append(glob.ravel())
        vals.append(coef.ravel())
        rhs.append(b)
        r0 += n

    ip = points.interior_points
    if len(ip):
        glob, _, _, lap = _physical_derivs(geo, disc, ip[:, 0], ip[:, 1])
        pts, _, _ = geo.evaluate(ip[:, 0], ip[:, 1], 1)
        add(glob, -lap, np.asarray(problem.f(pts[:, 0], pts[:, 1]), dtype=float) * np.ones(len(ip)))

    tp = points.top_boundary_points
    curve = geo.top_curve
    normal, H, _, y = curve.frame(tp)
    x = tp * curve.strip_width
    g = np.asarray(problem.g(x, y), dtype=float) * np.ones_like(x)
    if np.any(g <= 0):
        raise DataError(f"g must be positive on the free boundary, min g = {g.min():.3e}")
    kh = kh_coefficient(problem, curve, tp) * np.ones_like(x)
    glob, val, grad, _ = _physical_derivs(geo, disc, tp, np.ones_like(tp))
    dn = np.einsum("nk,nkl->nl", normal, grad)
    add(glob, dn + (kh / g)[:, None] * val, g + kh * problem.h0 / g)

    lp = points.lateral_points
    if len(lp):
        glob, vx, vy = _tensor_rows(disc, lp[:, 0], lp[:, 1], 0)
        val = np.einsum("na,nb->nab", vx[:, 0], vy[:, 0]).reshape(len(lp), -1)
        pts, _, _ = geo.evaluate(lp[:, 0], lp[:, 1], 1)
        add(glob, val, np.asarray(problem.h_fixed(pts[:, 0], pts[:, 1]), dtype=float))

    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(r0, n_dofs))
    b = np.concatenate(rhs)
    lifted = disc.lifting(geo, problem.h_fixed) * disc.bottom_mask
    free = np.flatnonzero(~disc.bottom_mask)
    if free.size != r0:
        raise RuntimeError(f"collocation system is not square: {r0} rows, {free.size} unknowns")
    b = b - A @ lifted
    return DiscreteSystem(A[:, free], b, free, lifted, dim_w=disc.space_x.dim,
                          label=f"collocation[{points.strategy}]")


def collocated_boundary_update(u_coeffs, curve, problem, top_points, disc):
    """Interpolate ``(h0 - u) / g`` at the top collocation abscissae."""
    sx = disc.space_x
    tp = np.asarray(top_points, dtype=float)
    m = disc.space_y.dim
    trace = np.asarray(u_coeffs).reshape(sx.dim, m)[:, -1]
    u_top = sx.evaluate(trace, tp)[0]
    y = curve.values(tp)[0]
    g = np.asarray(problem.g(tp * curve.strip_width, y), dtype=float) * np.ones_like(tp)
    if np.any(g <= 0):
        raise DataError(f"g must be positive on the free boundary, min g = {g.min():.3e}")
    target = (problem.h0 - u_top) / g
    B = sx.collocation_matrix(tp)
    w = np.zeros(sx.dim)
    wd = disc.w_dofs
    Bw = B[:, wd]
    cond = np.linalg.cond(Bw)
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalError(f"boundary interpolation matrix is singular (cond={cond:.3e})")
    w[wd] = np.linalg.solve(Bw, target)
    return w
