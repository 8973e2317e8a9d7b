"""Isogeometric quasi-Newton solvers for Bernoulli free boundary problems."""
from ._accel import backend
from .assembly import Discretization, ProblemData
from .geometry import BoundaryCurve, GeoMap
from .solver import ConvergenceHistory, SolverConfig, run

__all__ = ["BoundaryCurve", "ConvergenceHistory", "Discretization", "GeoMap",
           "ProblemData", "SolverConfig", "backend", "run"]
__version__ = "0.1.0"
