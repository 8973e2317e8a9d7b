"""Spline parametrization of the strip domain and its free top boundary.

The physical domain is the image of the unit square under a tensor-product
spline map whose x-component is the identity. The bottom row of the control
net lies on ``y = 0``; the top row carries the free boundary, stored as a
graph ``y(t)`` over the x-direction space.
"""
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .spline import KnotVector, TensorSplineSpace, UnivariateSplineSpace

_DET_TOL = 1e-14


def expanded_greville(space):
    """Greville abscissae of every unglued function (not wrapped)."""
    p, t = space.degree, space.knots
    return np.array([t[i + 1: i + p + 1].mean() for i in range(space.n_funcs)])


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Graph ``t -> (t, y(t))`` of the free boundary.

    ``y_coeffs`` are degree-of-freedom coefficients in ``space`` (periodic
    spaces therefore give a periodic curve automatically).
    """
    space: UnivariateSplineSpace
    y_coeffs: np.ndarray
    strip_width: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.y_coeffs, dtype=float)
        if c.shape != (self.space.dim,):
            raise ValueError(f"expected {self.space.dim} coefficients, got {c.shape}")
        object.__setattr__(self, "y_coeffs", c)

    @classmethod
    def from_function(cls, space, func):
        """Interpolate ``func`` at the Greville abscissae of ``space``."""
        g = space.greville()
        coeffs = np.linalg.solve(space.collocation_matrix(g), func(g) * np.ones_like(g))
        return cls(space, coeffs)

    def values(self, t, nd=0):
        """``(nd+1, npts)`` array of y and its derivatives."""
        return self.space.evaluate(self.y_coeffs, t, nd)

    def frame(self, t):
        """Normals, curvature, arc-length factor and height at many parameters.

        Returns ``(normal (npts, 2), H (npts,), arc (npts,), y (npts,))``.
        """
        if self.space.degree < 2:
            raise ValueError("curvature needs a curve of degree >= 2")
        y, dy, ddy = self.values(t, 2)
        arc = np.sqrt(1.0 + dy * dy)
        normal = np.stack([-dy / arc, 1.0 / arc], axis=-1)
        H = -ddy / arc**3
        return normal, H, arc, y


def normal_and_curvature(curve, t):
    """Outward unit normal and signed curvature of the boundary at ``t``."""
    normal, H, _, _ = curve.frame(np.array([t], dtype=float))
    return normal[0], float(H[0])


class GeoMap:
    """Tensor-product spline map of the unit square onto the physical domain.

    ``control_points`` has shape ``(n_funcs_x, dim_y, 2)``: the x-direction
    uses the unglued functions even when the space is periodic, since the
    map's x-component ``x = xi`` is not periodic.
    """

    def __init__(self, space, control_points, strip_width=1.0):
        self.space = space
        self.strip_width = float(strip_width)
        cp = np.asarray(control_points, dtype=float)
        expected = (space.space_x.n_funcs, space.space_y.dim, 2)
        if cp.shape != expected:
            raise ValueError(f"control net has shape {cp.shape}, expected {expected}")
        self.control_points = cp
        self.control_points.setflags(write=False)

    @classmethod
    def from_curve(cls, space_x, space_y, curve):
        """Flat-bottomed map with straight sides under ``curve``."""
        if curve.space is not space_x:
            raise ValueError("curve must live on the x-direction space of the map")
        width = curve.strip_width
        u = expanded_greville(space_x)
        v = expanded_greville(space_y)
        top = space_x.expand(curve.y_coeffs)
        cp = np.empty((u.size, v.size, 2))
        cp[:, :, 0] = width * u[:, None]
        cp[:, :, 1] = top[:, None] * v[None, :]
        geo = cls(TensorSplineSpace(space_x, space_y), cp, width)
        check_injective(geo)
        return geo

    @property
    def top_curve(self):
        sx = self.space.space_x
        y_top = self.control_points[: sx.dim, -1, 1]
        return BoundaryCurve(sx, y_top.copy(), self.strip_width)

    def evaluate(self, xi, eta, order=1):
        """Points, Jacobians and (order 2) Hessians at paired parameters.

        Returns ``(pts (n,2), jac (n,2,2), hess (n,2,2,2) or None)`` with
        ``jac[:, k, a] = d x_k / d xi_a``.
        """
        sx, sy = self.space.space_x, self.space.space_y
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        fx, vx = sx.basis_ders(xi, order)
        fy, vy = sy.basis_ders(eta, order)
        ia = fx[:, None] + np.arange(sx.degree + 1)
        jb = fy[:, None] + np.arange(sy.degree + 1)
        loc = self.control_points[ia[:, :, None], jb[:, None, :]]  # (n, a, b, 2)

        def comb(dx, dy):
            return np.einsum("na,nb,nabk->nk", vx[:, dx], vy[:, dy], loc)

        pts = comb(0, 0)
        jac = np.stack([comb(1, 0), comb(0, 1)], axis=-1)
        hess = None
        if order >= 2:
            hess = np.empty((xi.size, 2, 2, 2))
            hess[:, :, 0, 0] = comb(2, 0)
            hess[:, :, 0, 1] = hess[:, :, 1, 0] = comb(1, 1)
            hess[:, :, 1, 1] = comb(0, 2)
        return pts, jac, hess


def eval_map(geo, xi, eta, order=1):
    """Point, Jacobian and optional Hessian of the map at one parameter pair."""
    if order > 2:
        raise ValueError("order must be <= 2")
    pts, jac, hess = geo.evaluate([xi], [eta], max(order, 1))
    det = np.linalg.det(jac[0])
    if det <= _DET_TOL:
        raise GeometryError(f"degenerate Jacobian at ({xi}, {eta}): det={det:.3e}")
    return pts[0], jac[0], (hess[0] if hess is not None else None)


def check_injective(geo, n_points=None):
    """Raise :class:`GeometryError` if ``det J <= 0`` at any quadrature sample."""
    sx, sy = geo.space.space_x, geo.space.space_y
    px, _ = sx.quadrature(n_points)
    py, _ = sy.quadrature(n_points)
    xi, eta = np.meshgrid(px.ravel(), np.append(py.ravel(), 1.0), indexing="ij")
    _, jac, _ = geo.evaluate(xi.ravel(), eta.ravel(), 1)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if det.min() <= _DET_TOL:
        raise GeometryError(f"map is not injective: min det J = {det.min():.3e}")


def coons_refit(geo, new_curve):
    """Replace the top boundary and refill the control net by discrete Coons blending.

    Side columns are the straight segments between the bottom and top
    corners, so they are unchanged whenever the corners are.
    """
    sx, sy = geo.space.space_x, geo.space.space_y
    if new_curve.space is not sx:
        raise ValueError("new_curve must live on the map's x-direction space")
    old = geo.control_points
    cp = np.array(old)
    cp[:, -1, 1] = sx.expand(new_curve.y_coeffs)
    gu = expanded_greville(sx)
    gv = expanded_greville(sy)
    u = (gu - gu[0]) / (gu[-1] - gu[0])
    v = (gv - gv[0]) / (gv[-1] - gv[0])

    bottom, top = cp[:, 0].copy(), cp[:, -1].copy()
    left = (1 - v)[:, None] * bottom[0] + v[:, None] * top[0]
    right = (1 - v)[:, None] * bottom[-1] + v[:, None] * top[-1]
    U, V = u[:, None, None], v[None, :, None]
    corners = ((1 - U) * (1 - V) * bottom[0] + U * (1 - V) * bottom[-1]
               + (1 - U) * V * top[0] + U * V * top[-1])
    cp = ((1 - U) * left[None] + U * right[None]
          + (1 - V) * bottom[:, None] + V * top[:, None] - corners)
    refit = GeoMap(geo.space, cp, geo.strip_width)
    check_injective(refit)
    return refit


# -----------------------------------------------------------------------------
# plain-text snapshots

def dump_geometry(geo, path):
    """Write the map as text: header, knot vectors, control net ("x y" per line)."""
    sx, sy = geo.space.space_x, geo.space.space_y
    cp = geo.control_points
    lines = [
        "# isofbp geometry",
        f"degrees {sx.degree} {sy.degree}",
        f"kinds {sx.knot_vector.kind} {sy.knot_vector.kind}",
        f"knots {sx.knots.size} {sy.knots.size}",
        " ".join(f"{k:.17g}" for k in sx.knots),
        " ".join(f"{k:.17g}" for k in sy.knots),
        f"control {cp.shape[0]} {cp.shape[1]}",
    ]
    lines += [f"{x:.17g} {y:.17g}" for x, y in cp.reshape(-1, 2)]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_geometry(path):
    with open(path, encoding="ascii") as fh:
        rows = [ln.split() for ln in fh if ln.strip() and not ln.startswith("#")]
    px, py = int(rows[0][1]), int(rows[0][2])
    kx, ky = rows[1][1], rows[1][2]
    kvx = KnotVector(np.array(rows[3], dtype=float), px, kx)
    kvy = KnotVector(np.array(rows[4], dtype=float), py, ky)
    nx, ny = int(rows[5][1]), int(rows[5][2])
    cp = np.array(rows[6: 6 + nx * ny], dtype=float).reshape(nx, ny, 2)
    space = TensorSplineSpace(UnivariateSplineSpace(kvx), UnivariateSplineSpace(kvy))
    return GeoMap(space, cp)
