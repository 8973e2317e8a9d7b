"""Quasi-Newton outer loops for the free boundary problem.

Each iteration solves on the current domain, obtains the normal boundary
velocity ``w = dV . n``, moves the boundary vertically by ``w / n_y`` and
refits the interior of the control net.
"""
import csv
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .assembly import (Discretization, assemble_coupled, assemble_decoupled,
                       solve_coupled, solve_system)
from .collocation import assemble_collocated, collocated_boundary_update, collocation_points
from .errors import DataError, GeometryError, NumericalError
from .geometry import BoundaryCurve, GeoMap, coons_refit
from .spline import l2_project

log = logging.getLogger(__name__)

ALGORITHMS = ("coupled", "decoupled", "collocation")
CSV_HEADER = ["iter", "dirichlet_error", "surface_error", "update_norm", "wall_time_s"]


@dataclass
class SolverConfig:
    algorithm: str = "decoupled"
    degree: int = 3
    mesh: Tuple[int, int] = (8, 8)
    tol: float = 1e-10
    max_iter: int = 50
    point_strategy: str = "greville"
    initial_boundary: Optional[Callable] = None
    n_quad: Optional[int] = None
    plateau_rtol: float = 0.01
    plateau_window: int = 3

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.degree < 2:
            raise ValueError("degree must be >= 2")
        if isinstance(self.mesh, int):
            self.mesh = (self.mesh, self.mesh)


@dataclass
class IterationRecord:
    iter: int
    dirichlet_error: float
    surface_error: float
    update_norm: float
    wall_time: float


@dataclass
class ConvergenceHistory:
    config: SolverConfig
    records: List[IterationRecord] = field(default_factory=list)
    status: str = "failed"
    message: str = ""
    geometry: Optional[GeoMap] = None
    u_coeffs: Optional[np.ndarray] = None

    @property
    def iterations(self):
        return len(self.records)

    @property
    def final(self):
        return self.records[-1] if self.records else None

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in self.records:
                writer.writerow([r.iter] + [_fmt(v) for v in
                                            (r.dirichlet_error, r.surface_error, r.update_norm, r.wall_time)])


def _fmt(v):
    return "nan" if v is None or not np.isfinite(v) else f"{v:.16e}"


def read_history_csv(path):
    """Rows of a history CSV as a dict of float arrays keyed by column name."""
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


# -----------------------------------------------------------------------------
# error metrics

def _fine_quadrature(space, extra=4):
    pts, wts = space.quadrature(space.degree + 1 + extra)
    return pts.ravel(), wts.ravel()


def boundary_trace(u_coeffs, geo):
    """x-space coefficients of ``u`` restricted to the top boundary."""
    sx, sy = geo.space.space_x, geo.space.space_y
    return np.asarray(u_coeffs).reshape(sx.dim, sy.dim)[:, -1]


def dirichlet_error(u_coeffs, geo, h0):
    """L2 norm of ``u - h0`` on the free boundary (arc-length measure)."""
    curve = geo.top_curve
    t, w = _fine_quadrature(curve.space)
    u = curve.space.evaluate(boundary_trace(u_coeffs, geo), t)[0]
    dy = curve.values(t, 1)[1]
    return float(np.sqrt(np.sum((u - h0) ** 2 * np.sqrt(1 + dy * dy) * w)))


def surface_error(curve, exact_alpha):
    """Vertical L2 distance between ``curve`` and ``y = 1 + alpha(x)`` over [0, 1]."""
    t, w = _fine_quadrature(curve.space)
    y = curve.values(t)[0]
    return float(np.sqrt(np.sum((y - 1.0 - exact_alpha(t * curve.strip_width)) ** 2 * w)))


def update_norm(curve, w_coeffs):
    """L2 norm of the boundary velocity on the free boundary (arc-length measure)."""
    t, wt = _fine_quadrature(curve.space)
    w = curve.space.evaluate(w_coeffs, t)[0]
    dy = curve.values(t, 1)[1]
    return float(np.sqrt(np.sum(w * w * np.sqrt(1 + dy * dy) * wt)))


# -----------------------------------------------------------------------------
# boundary update

def update_boundary(curve, w_coeffs):
    """Move the boundary vertically by ``w / n_y`` (L2-projected onto the curve space)."""
    space = curve.space
    w_coeffs = np.asarray(w_coeffs, dtype=float)

    def displacement(t):
        w = space.evaluate(w_coeffs, t)[0]
        dy = curve.values(t, 1)[1]
        n_y = 1.0 / np.sqrt(1.0 + dy * dy)
        if not np.all(np.isfinite(n_y)) or np.any(n_y <= 0):
            raise GeometryError("boundary normal has nonpositive vertical component")
        return w / n_y

    if not np.any(w_coeffs):
        return curve
    delta = l2_project(displacement, space, clamp_ends=not space.periodic)
    return BoundaryCurve(space, curve.y_coeffs + delta, curve.strip_width)


def decoupled_velocity(u_coeffs, geo, problem, disc):
    """Project ``(h0 - u) / g`` onto the boundary velocity space."""
    curve = geo.top_curve
    space = curve.space
    trace = boundary_trace(u_coeffs, geo)

    def quotient(t):
        u = space.evaluate(trace, t)[0]
        y = curve.values(t)[0]
        g = np.asarray(problem.g(t * curve.strip_width, y), dtype=float) * np.ones_like(t)
        if np.any(g <= 0):
            raise DataError(f"g must be positive on the free boundary, min g = {g.min():.3e}")
        return (problem.h0 - u) / g

    def arc(t):
        dy = curve.values(t, 1)[1]
        return np.sqrt(1 + dy * dy)

    return l2_project(quotient, space, arc_weight=arc, clamp_ends=not disc.periodic)


# -----------------------------------------------------------------------------
# outer loop

def _stagnated(norms, window, rtol):
    if len(norms) <= window:
        return False
    tail = norms[-window - 1:]
    rel = np.abs(np.diff(tail)) / np.maximum(tail[:-1], 1e-300)
    return bool(np.all(rel < rtol))


def step(config, problem, disc, geo, points=None):
    """One solve on the current geometry; returns ``(u_coeffs, w_coeffs)``."""
    if config.algorithm == "coupled":
        return solve_coupled(assemble_coupled(geo, problem, disc))
    if config.algorithm == "decoupled":
        u, _ = solve_system(assemble_decoupled(geo, problem, disc))
        return u, decoupled_velocity(u, geo, problem, disc)
    u, _ = solve_system(assemble_collocated(geo, problem, disc, points))
    w = collocated_boundary_update(u, geo.top_curve, problem, points.top_boundary_points, disc)
    return u, w


def run(config, problem):
    """Iterate the selected scheme until ``||w|| <= tol``, a plateau or ``max_iter``."""
    history = ConvergenceHistory(config)
    nx, ny = config.mesh
    try:
        disc = Discretization(config.degree, nx, ny, problem.bc_kind, config.n_quad)
        init = config.initial_boundary or (lambda x: np.ones_like(x))
        curve = BoundaryCurve.from_function(disc.space_x, init)
        if curve.values(np.linspace(0, 1, 64))[0].min() <= 0:
            raise GeometryError("initial boundary must lie strictly above y = 0")
        geo = GeoMap.from_curve(disc.space_x, disc.space_y, curve)
        points = None
        if config.algorithm == "collocation":
            points = collocation_points(config.point_strategy, disc.space_x, disc.space_y, problem.bc_kind)
    except (GeometryError, DataError, NumericalError, ValueError) as exc:
        # UnsupportedStrategyError and bad mesh/degree combinations are ValueErrors
        history.message = f"setup: {exc}"
        return history

    norms = []
    for k in range(1, config.max_iter + 1):
        t0 = time.perf_counter()
        try:
            if k > 1:
                geo = coons_refit(geo, curve)
            u, w = step(config, problem, disc, geo, points)
            norm = update_norm(curve, w)
            d_err = dirichlet_error(u, geo, problem.h0)
            s_err = (surface_error(curve, problem.exact_boundary)
                     if problem.exact_boundary is not None else float("nan"))
        except (GeometryError, DataError, NumericalError) as exc:
            history.status = "failed"
            history.message = f"iteration {k}: {exc}"
            log.warning("%s", history.message)
            return history
        history.records.append(IterationRecord(k, d_err, s_err, norm, time.perf_counter() - t0))
        history.geometry, history.u_coeffs = geo, u
        norms.append(norm)
        log.debug("iter %d  |w|=%.3e  dir=%.3e  surf=%.3e", k, norm, d_err, s_err)
        if norm <= config.tol:
            history.status = "converged"
            return history
        if _stagnated(norms, config.plateau_window, config.plateau_rtol):
            history.status = "plateau"
            return history
        try:
            curve = update_boundary(curve, w)
        except GeometryError as exc:
            history.status = "failed"
            history.message = f"iteration {k}: {exc}"
            return history
    history.status = "max-iter"
    return history
