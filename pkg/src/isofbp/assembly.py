"""Galerkin assembly for the coupled and the decoupled quasi-Newton steps.

Both schemes share the stiffness matrix of the current domain and a set of
boundary matrices on the free boundary ``eta = 1``. Dirichlet data on the
bottom (and, for Dirichlet lateral conditions, on the sides) are imposed
strongly by interpolating ``h`` at the Greville points of each edge.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import DataError, NumericalError
from .spline import TensorSplineSpace, build_open_space, build_periodic_space


@dataclass(frozen=True)
class ProblemData:
    """Data of the Bernoulli problem.

    ``f``, ``g``, ``h_fixed`` take ``(x, y)`` arrays; ``grad_g`` returns an
    array with a trailing axis of length 2. ``exact_boundary`` is the height
    perturbation ``alpha`` with exact free boundary ``y = 1 + alpha(x)``.
    """
    f: Callable
    g: Callable
    grad_g: Callable
    h_fixed: Callable
    h0: float = 1.0
    bc_kind: str = "dirichlet"
    exact_boundary: Optional[Callable] = None

    def __post_init__(self):
        if self.bc_kind not in ("dirichlet", "periodic"):
            raise ValueError(f"bc_kind must be 'dirichlet' or 'periodic', got {self.bc_kind!r}")


class Discretization:
    """Spline spaces, degree-of-freedom maps and quadrature settings.

    Global dof ``(i, j)`` of the field ``u`` (``i`` along x, ``j`` along y)
    is numbered ``i * m + j`` with ``m = dim(space_y)``. The boundary unknown
    ``w`` uses the x-direction space; with Dirichlet lateral conditions its
    two end coefficients are pinned to zero.
    """

    def __init__(self, degree, nx, ny, bc_kind="dirichlet", n_quad=None):
        if degree < 1:
            raise ValueError("degree must be >= 1")
        self.degree = degree
        self.bc_kind = bc_kind
        if bc_kind == "periodic":
            self.space_x = build_periodic_space(nx + degree, degree)
        else:
            self.space_x = build_open_space(nx, degree)
        self.space_y = build_open_space(ny, degree)
        self.tensor = TensorSplineSpace(self.space_x, self.space_y)
        self.n_quad = degree + 1 if n_quad is None else int(n_quad)

        nxd, m = self.space_x.dim, self.space_y.dim
        self.shape = (nxd, m)
        self.n_dofs = nxd * m
        ii, jj = np.meshgrid(np.arange(nxd), np.arange(m), indexing="ij")
        bottom = jj == 0
        lateral = np.zeros_like(bottom)
        if bc_kind == "dirichlet":
            lateral = (ii == 0) | (ii == nxd - 1)
        self.bottom_mask = bottom.ravel()
        self.lateral_mask = lateral.ravel()
        fixed = self.bottom_mask | self.lateral_mask
        self.fixed = np.flatnonzero(fixed)
        self.free = np.flatnonzero(~fixed)
        self.top = np.arange(nxd) * m + (m - 1)
        if bc_kind == "dirichlet":
            self.w_dofs = np.arange(1, nxd - 1)
        else:
            self.w_dofs = np.arange(nxd)

    @property
    def periodic(self):
        return self.bc_kind == "periodic"

    def lifting(self, geo, h):
        """Full coefficient vector holding the interpolated Dirichlet values."""
        sx, sy = self.space_x, self.space_y
        nxd, m = self.shape
        c = np.zeros((nxd, m))
        if self.bc_kind == "dirichlet":
            v = sy.greville()
            By = sy.collocation_matrix(v)
            for i, xi in ((0, 0.0), (nxd - 1, 1.0)):
                pts, _, _ = geo.evaluate(np.full(v.size, xi), v, 1)
                c[i, :] = np.linalg.solve(By, h(pts[:, 0], pts[:, 1]))
        u = sx.greville()
        pts, _, _ = geo.evaluate(u, np.zeros(u.size), 1)
        c[:, 0] = np.linalg.solve(sx.collocation_matrix(u), h(pts[:, 0], pts[:, 1]))
        return c.ravel()


class QuadratureGrid:
    """Geometry and basis data at the tensor Gauss points of every element."""

    def __init__(self, disc, geo):
        sx, sy = disc.space_x, disc.space_y
        nq = disc.n_quad
        self.px, self.wx, firstx, self.bx = sx.element_basis(nq, 1)
        self.py, self.wy, firsty, self.by = sy.element_basis(nq, 1)
        self.dofx = sx.local_dofs(firstx)
        self.dofy = sy.local_dofs(firsty)
        ia = firstx[:, None] + np.arange(sx.degree + 1)
        jb = firsty[:, None] + np.arange(sy.degree + 1)
        cp = geo.control_points[ia[:, None, :, None], jb[None, :, None, :]]  # (ex, ey, a, b, 2)
        b0x, b1x = self.bx[:, :, 0], self.bx[:, :, 1]
        b0y, b1y = self.by[:, :, 0], self.by[:, :, 1]
        self.points = np.einsum("xqa,yrb,xyabk->xyqrk", b0x, b0y, cp)
        jx = np.einsum("xqa,yrb,xyabk->xyqrk", b1x, b0y, cp)
        jy = np.einsum("xqa,yrb,xyabk->xyqrk", b0x, b1y, cp)
        # jac[..., k, a] = d x_k / d xi_a
        self.jac = np.stack([jx, jy], axis=-1)
        det = self.jac[..., 0, 0] * self.jac[..., 1, 1] - self.jac[..., 0, 1] * self.jac[..., 1, 0]
        if det.min() <= 1e-14:
            raise NumericalError(f"nonpositive Jacobian in assembly: {det.min():.3e}")
        self.det = det
        w = self.wx[:, None, :, None] * self.wy[None, :, None, :]
        self.wdet = w * det
        inv = np.empty_like(self.jac)
        inv[..., 0, 0] = self.jac[..., 1, 1] / det
        inv[..., 1, 1] = self.jac[..., 0, 0] / det
        inv[..., 0, 1] = -self.jac[..., 0, 1] / det
        inv[..., 1, 0] = -self.jac[..., 1, 0] / det
        self.inv = inv
        # w * det * J^-1 J^-T, packed symmetric
        g = np.einsum("...ak,...bk->...ab", inv, inv)
        self.metric = np.stack([g[..., 0, 0], g[..., 0, 1], g[..., 1, 1]], axis=-1) * self.wdet[..., None]
        self.m = disc.space_y.dim

    def stiffness(self, n_dofs):
        rows, cols, vals = kernels.stiffness_coo(self.bx, self.by, self.metric, self.dofx, self.dofy, self.m)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n_dofs, n_dofs))

    def load(self, func, n_dofs):
        """Vector of ``int func * phi_k dOmega``."""
        x, y = self.points[..., 0], self.points[..., 1]
        fw = np.asarray(func(x, y), dtype=float) * self.wdet
        loc = np.einsum("xqa,yrb,xyqr->xyab", self.bx[:, :, 0], self.by[:, :, 0], fw)
        glob = self.dofx[:, None, :, None] * self.m + self.dofy[None, :, None, :]
        out = np.zeros(n_dofs)
        np.add.at(out, glob.ravel(), loc.ravel())
        return out

    def integrate(self, func):
        x, y = self.points[..., 0], self.points[..., 1]
        return float(np.sum(np.asarray(func(x, y), dtype=float) * self.wdet))


class BoundaryData:
    """Quantities on the free boundary at the Gauss points of the x-space."""

    def __init__(self, disc, curve, problem, n_quad=None):
        sx = disc.space_x
        pts, wts = sx.quadrature(disc.n_quad if n_quad is None else n_quad)
        self.t = pts.ravel()
        self.weights = wts.ravel()
        normal, H, arc, y = curve.frame(self.t)
        self.normal, self.H, self.arc, self.y = normal, H, arc, y
        self.ds = self.weights * arc
        x = self.t * curve.strip_width
        self.x = x
        self.g = np.asarray(problem.g(x, y), dtype=float) * np.ones_like(x)
        if np.any(self.g <= 0):
            raise DataError(f"g must be positive on the free boundary, min g = {self.g.min():.3e}")
        grad_g = np.asarray(problem.grad_g(x, y), dtype=float)
        self.f = np.asarray(problem.f(x, y), dtype=float) * np.ones_like(x)
        self.kh = np.sum(grad_g * normal, axis=-1) + H * self.g + self.f
        self.B = sx.collocation_matrix(self.t)
        self.h0 = problem.h0

    def mass(self, weight=1.0):
        """Dense ``int weight * psi_i psi_j dGamma`` over x-space dofs."""
        w = self.ds * weight
        return self.B.T @ (w[:, None] * self.B)

    def vector(self, weight=1.0):
        return self.B.T @ (self.ds * weight)


def kh_coefficient(problem, curve, t):
    """``K_H = d_n g + H g + f`` at the boundary point ``gamma(t)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    normal, H, _, y = curve.frame(t)
    x = t * curve.strip_width
    grad_g = np.asarray(problem.grad_g(x, y), dtype=float)
    g = np.asarray(problem.g(x, y), dtype=float)
    f = np.asarray(problem.f(x, y), dtype=float)
    out = np.sum(grad_g * normal, axis=-1) + H * g + f
    return out if out.size > 1 else float(out[0])


@dataclass
class DiscreteSystem:
    """Linear system over the free unknowns.

    The unknown vector is ``[u_free, w]``; ``n_w`` is zero for the decoupled
    and collocated systems. ``lifted`` is the full ``u`` coefficient vector
    with the Dirichlet values set and zeros elsewhere.
    """
    matrix: sp.spmatrix
    rhs: np.ndarray
    free: np.ndarray
    lifted: np.ndarray
    n_w: int = 0
    w_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    dim_w: int = 0
    label: str = ""

    @property
    def n_unknowns(self):
        return self.rhs.size


def _top_embedding(disc):
    """Sparse ``(n_dofs, dim_x)`` map from x-space dofs to top-row field dofs."""
    nxd = disc.space_x.dim
    return sp.csr_matrix((np.ones(nxd), (disc.top, np.arange(nxd))), shape=(disc.n_dofs, nxd))


def _prepare(geo, problem, disc):
    if problem.bc_kind != disc.bc_kind:
        raise ValueError("problem and discretization disagree on the lateral boundary condition")
    grid = QuadratureGrid(disc, geo)
    bdry = BoundaryData(disc, geo.top_curve, problem)
    K = grid.stiffness(disc.n_dofs)
    F = grid.load(problem.f, disc.n_dofs)
    lifted = disc.lifting(geo, problem.h_fixed)
    return grid, bdry, K, F, lifted


def assemble_coupled(geo, problem, disc):
    """Block system for ``(u, w)`` with ``w = dV . n`` on the free boundary."""
    _, bdry, K, F, lifted = _prepare(geo, problem, disc)
    T = _top_embedding(disc)
    free, wd = disc.free, disc.w_dofs
    MK = T @ sp.csr_matrix(bdry.mass(bdry.kh))        # int K_H phi psi
    M1 = T @ sp.csr_matrix(bdry.mass())               # int phi psi
    Mg = bdry.mass(bdry.g)                             # int g psi psi

    rhs_u = F + T @ bdry.vector(bdry.g) - K @ lifted
    rhs_w = problem.h0 * bdry.vector()[wd] - (M1.T @ lifted)[wd]
    A11 = K[free][:, free]
    A12 = -MK[free][:, wd]
    A21 = M1.T.tocsr()[wd][:, free]
    A22 = sp.csr_matrix(Mg[np.ix_(wd, wd)])
    A = sp.bmat([[A11, A12], [A21, A22]], format="csr")
    rhs = np.concatenate([rhs_u[free], rhs_w])
    return DiscreteSystem(A, rhs, free, lifted, n_w=wd.size, w_dofs=wd,
                          dim_w=disc.space_x.dim, label="coupled")


def assemble_decoupled(geo, problem, disc):
    """Single-field system with the Robin-like term ``(K_H / g) u`` on the free boundary."""
    _, bdry, K, F, lifted = _prepare(geo, problem, disc)
    T = _top_embedding(disc)
    ratio = bdry.kh / bdry.g
    R = T @ sp.csr_matrix(bdry.mass(ratio)) @ T.T
    A = (K + R).tocsr()
    b = F + T @ bdry.vector(bdry.g + ratio * problem.h0) - A @ lifted
    free = disc.free
    return DiscreteSystem(A[free][:, free], b[free], free, lifted,
                          dim_w=disc.space_x.dim, label="decoupled")


def solve_system(system):
    """Direct sparse solve; returns the full ``u`` vector and ``w`` dof coefficients."""
    A = sp.csc_matrix(system.matrix)
    try:
        lu = spla.splu(A)
        x = lu.solve(system.rhs)
    except RuntimeError as exc:
        raise NumericalError(f"{system.label} system is singular: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"{system.label} solve produced non-finite values")
    u = system.lifted.copy()
    n_u = system.free.size
    u[system.free] = x[:n_u]
    w = np.zeros(system.dim_w)
    if system.n_w:
        w[system.w_dofs] = x[n_u:]
    return u, w


def solve_coupled(system):
    """Solve the coupled block system; returns ``(u_coeffs, w_coeffs)``."""
    return solve_system(system)


# -----------------------------------------------------------------------------
# shape functionals

def domain_integral(geo, psi, disc):
    """``int_Omega psi dOmega`` on the domain mapped by ``geo``."""
    return QuadratureGrid(disc, geo).integrate(psi)


def domain_shape_derivative(curve, psi, delta, n_quad=None):
    """Boundary form ``int_Gamma psi (dV . n) dGamma`` of the domain functional's
    shape derivative, for the vertical field ``dV = (0, delta(x))`` on the top.

    Only the free boundary moves, so the bottom and lateral sides do not
    contribute.
    """
    pts, wts = curve.space.quadrature(n_quad or curve.space.degree + 3)
    t, w = pts.ravel(), wts.ravel()
    normal, _, arc, y = curve.frame(t)
    x = t * curve.strip_width
    vn = np.asarray(delta(x), dtype=float) * normal[:, 1]
    return float(np.sum(np.asarray(psi(x, y), dtype=float) * vn * arc * w))
