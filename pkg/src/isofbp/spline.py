"""Univariate and tensor-product B-spline spaces on [0, 1].

Two flavors of univariate space are supported: open knot vectors (end knots
repeated ``p+1`` times) and uniform periodic ones, where the knot vector runs
``p`` spacings past both ends of [0, 1] and the first ``p`` functions are
glued to the last ``p``. Periodic evaluation works on the unglued
("expanded") functions and wraps indices modulo the space dimension.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalError, SplineDomainError

_DOMAIN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class KnotVector:
    knots: np.ndarray
    degree: int
    kind: str = "open"

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        p = self.degree
        if p < 1:
            raise ValueError("degree must be >= 1")
        if self.kind not in ("open", "periodic"):
            raise ValueError(f"unknown knot vector kind {self.kind!r}")
        if knots.ndim != 1 or knots.size < 2 * p + 2:
            raise ValueError("knot vector too short for the degree")
        if np.any(np.diff(knots) < 0):
            raise ValueError("knots must be nondecreasing")
        if self.kind == "open":
            if knots[0] != 0.0 or knots[-1] != 1.0:
                raise ValueError("open knot vectors are normalized to [0, 1]")
            if np.any(knots[: p + 1] != 0.0) or np.any(knots[-p - 1:] != 1.0):
                raise ValueError("open knot vector needs end multiplicity p+1")
            if knots[p + 1] == 0.0 or knots[-p - 2] == 1.0:
                raise ValueError("end multiplicity exceeds p+1")
            inner = knots[p + 1: -p - 1]
        else:
            h = np.diff(knots)
            if np.any(h <= 0) or not np.allclose(h, h[0], rtol=1e-12, atol=1e-14):
                raise ValueError("periodic knot vectors must be uniform")
            if abs(knots[p]) > 1e-14 or abs(knots[-p - 1] - 1.0) > 1e-14:
                raise ValueError("periodic knot vector must cover [0, 1] between knots p and -p-1")
            inner = knots[p + 1: -p - 1]
        if inner.size:
            _, counts = np.unique(inner, return_counts=True)
            if counts.max() > p:
                raise ValueError("interior knot multiplicity exceeds the degree")

    @property
    def n_funcs(self):
        return self.knots.size - self.degree - 1


def open_knot_vector(n_elements, degree):
    inner = np.arange(1, n_elements) / n_elements
    knots = np.concatenate([np.zeros(degree + 1), inner, np.ones(degree + 1)])
    return KnotVector(knots, degree, "open")


def periodic_knot_vector(n_elements, degree):
    knots = np.arange(-degree, n_elements + degree + 1) / n_elements
    knots[degree] = 0.0
    knots[n_elements + degree] = 1.0
    return KnotVector(knots, degree, "periodic")


class UnivariateSplineSpace:
    """Spline space of one knot vector, optionally periodic.

    ``n_funcs`` counts the unglued B-splines; ``dim`` is the number of degrees
    of freedom (``n_funcs - p`` when periodic).
    """

    def __init__(self, knot_vector):
        self.knot_vector = knot_vector
        self.knots = knot_vector.knots
        self.degree = knot_vector.degree
        self.periodic = knot_vector.kind == "periodic"
        self.n_funcs = knot_vector.n_funcs
        p = self.degree
        self.dim = self.n_funcs - p if self.periodic else self.n_funcs
        self._lo = p
        self._hi = self.n_funcs - 1
        spans = np.arange(self._lo, self._hi + 1)
        self.element_spans = spans[self.knots[spans] < self.knots[spans + 1]]
        self.breaks = np.append(self.knots[self.element_spans], self.knots[self._hi + 1])

    def __repr__(self):
        kind = "periodic" if self.periodic else "open"
        return f"UnivariateSplineSpace(p={self.degree}, n_elements={self.n_elements}, {kind}, dim={self.dim})"

    @property
    def n_elements(self):
        return self.element_spans.size

    # -- evaluation ---------------------------------------------------------

    def _check(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if xs.size and (xs.min() < -_DOMAIN_TOL or xs.max() > 1.0 + _DOMAIN_TOL):
            raise SplineDomainError(f"evaluation point outside [0, 1]: {xs.min()}, {xs.max()}")
        return np.clip(xs, 0.0, 1.0)

    def spans(self, xs):
        return kernels.find_spans(self.knots, self._lo, self._hi, self._check(xs))

    def basis_ders(self, xs, nd=0):
        """Return ``(first, values)`` for many points.

        ``first`` holds the expanded index of the first nonzero function at
        each point; ``values`` has shape ``(npts, nd+1, p+1)``.
        """
        if nd > self.degree:
            raise ValueError(f"derivative order {nd} exceeds degree {self.degree}")
        xs = self._check(xs)
        spans = kernels.find_spans(self.knots, self._lo, self._hi, xs)
        vals = kernels.basis_ders(self.knots, self.degree, xs, spans, nd)
        return spans - self.degree, vals

    def dof_index(self, expanded):
        expanded = np.asarray(expanded)
        return expanded % self.dim if self.periodic else expanded

    def local_dofs(self, first):
        """Degree-of-freedom indices of the ``p+1`` local functions."""
        first = np.asarray(first)
        return self.dof_index(first[..., None] + np.arange(self.degree + 1))

    def collocation_matrix(self, xs, deriv=0):
        """Dense matrix ``M[i, j] = d^deriv psi_j(xs[i])`` over the dofs."""
        first, vals = self.basis_ders(xs, deriv)
        xs = np.atleast_1d(xs)
        mat = np.zeros((xs.size, self.dim))
        idx = self.local_dofs(first)
        rows = np.repeat(np.arange(xs.size), self.degree + 1)
        np.add.at(mat, (rows, idx.ravel()), vals[:, deriv, :].ravel())
        return mat

    def expand(self, coeffs):
        """Map dof coefficients to coefficients of the unglued functions."""
        coeffs = np.asarray(coeffs, dtype=float)
        if not self.periodic:
            return coeffs.copy()
        return coeffs[np.arange(self.n_funcs) % self.dim]

    def evaluate(self, coeffs, xs, deriv=0):
        """Evaluate ``sum c_j psi_j`` (dof coefficients) and derivatives.

        Returns an array of shape ``(deriv+1, npts)``.
        """
        first, vals = self.basis_ders(xs, deriv)
        c = np.asarray(coeffs, dtype=float)[self.local_dofs(first)]
        return np.einsum("nda,na->dn", vals, c)

    # -- point sets ---------------------------------------------------------

    def greville(self):
        return greville_points(self)

    def quadrature(self, n_points=None):
        """Gauss-Legendre points and weights per element, shape ``(nel, nq)``."""
        nq = self.degree + 1 if n_points is None else int(n_points)
        x, w = np.polynomial.legendre.leggauss(nq)
        a, b = self.breaks[:-1, None], self.breaks[1:, None]
        pts = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
        wts = 0.5 * (b - a) * w[None, :]
        return pts, wts

    def element_basis(self, n_points=None, nd=1):
        """Quadrature data per element.

        Returns ``(pts, wts, first, vals)`` with ``first`` of shape ``(nel,)``
        and ``vals`` of shape ``(nel, nq, nd+1, p+1)``.
        """
        pts, wts = self.quadrature(n_points)
        nel, nq = pts.shape
        spans = np.repeat(self.element_spans, nq)
        vals = kernels.basis_ders(self.knots, self.degree, pts.ravel(), spans, nd)
        return pts, wts, self.element_spans - self.degree, vals.reshape(nel, nq, nd + 1, self.degree + 1)


@dataclass(frozen=True, eq=False)
class TensorSplineSpace:
    space_x: UnivariateSplineSpace
    space_y: UnivariateSplineSpace

    @property
    def dim(self):
        return self.space_x.dim * self.space_y.dim

    @property
    def shape(self):
        return (self.space_x.dim, self.space_y.dim)


def build_open_space(n_elements, degree):
    return UnivariateSplineSpace(open_knot_vector(n_elements, degree))


def build_periodic_space(n_funcs, degree):
    """Periodic space with ``n_funcs`` unglued functions, dimension ``n_funcs - degree``."""
    if n_funcs <= 2 * degree:
        raise ValueError(f"periodic space needs n_funcs > 2p, got n_funcs={n_funcs}, p={degree}")
    return UnivariateSplineSpace(periodic_knot_vector(n_funcs - degree, degree))


def eval_basis(space, xi, max_deriv=0):
    """Nonzero basis functions at a single point.

    Returns ``(first_index, values)`` where ``values`` has shape
    ``(max_deriv+1, p+1)``. For periodic spaces ``first_index`` is already
    reduced modulo the dimension; the local functions are
    ``(first_index + a) % dim``.
    """
    if max_deriv > space.degree:
        raise ValueError(f"max_deriv={max_deriv} exceeds degree {space.degree}")
    if not (-_DOMAIN_TOL <= xi <= 1.0 + _DOMAIN_TOL):
        raise SplineDomainError(f"xi={xi} outside [0, 1]")
    first, vals = space.basis_ders([xi], max_deriv)
    return int(space.dof_index(first[0])), vals[0]


def greville_points(space):
    """Greville abscissae, one per degree of freedom.

    Periodic abscissae are wrapped into [0, 1).
    """
    p, t = space.degree, space.knots
    g = np.array([t[i + 1: i + p + 1].mean() for i in range(space.dim)])
    if space.periodic:
        g = np.mod(g, 1.0)
        g[np.isclose(g, 1.0, rtol=0, atol=1e-13)] = 0.0
        g[np.abs(g) < 1e-13] = 0.0
    return g


def l2_project(func, space, arc_weight=None, clamp_ends=False, n_quad=None):
    """L2 projection of ``func`` onto ``space``; returns dof coefficients.

    ``arc_weight`` is an optional weight ``w(t)`` in the inner product. With
    ``clamp_ends`` (open spaces only) the two end coefficients are pinned to
    zero and the projection runs in the remaining subspace.
    """
    pts, wts = space.quadrature(n_quad if n_quad is not None else space.degree + 3)
    t = pts.ravel()
    w = wts.ravel()
    if arc_weight is not None:
        w = w * np.asarray(arc_weight(t), dtype=float)
    B = space.collocation_matrix(t)
    f = np.asarray(func(t), dtype=float) * np.ones_like(t)
    if clamp_ends:
        if space.periodic:
            raise ValueError("clamp_ends applies to open spaces only")
        c = np.zeros(space.dim)
        B = B[:, 1:-1]
        c[1:-1] = _solve_dense(B.T @ (w[:, None] * B), B.T @ (w * f))
        return c
    return _solve_dense(B.T @ (w[:, None] * B), B.T @ (w * f))


def _solve_dense(mat, rhs):
    if mat.size == 0:
        return np.zeros(0)
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalError(f"Gram matrix is singular or badly conditioned (cond={cond:.3e})")
    return np.linalg.solve(mat, rhs)
