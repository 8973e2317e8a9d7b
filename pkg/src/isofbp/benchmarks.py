"""Manufactured free boundary problems with known exact boundaries.

All three tests share the exact solution

    u(x, y) = y / s + alpha * (y / s) * (1 - y / s),   s = 1 + alpha(x),

which simplifies to ``u = y - beta(x) y**2`` with ``beta = alpha / s**2`` and
equals 1 on the curve ``y = 1 + alpha(x)``. Data are ``f = -lap u`` and
``g = grad u . nu`` with ``nu = (-alpha', 1) / sqrt(1 + alpha'**2)``.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import ProblemData


@dataclass(frozen=True)
class ManufacturedSolution:
    u_ex: Callable
    grad_u_ex: Callable
    laplace_u_ex: Callable
    alpha_ex: Callable
    alpha_prime: Callable


class _Profile:
    """alpha, its first two derivatives, and beta = alpha / (1 + alpha)**2."""

    def __init__(self, alpha, d1, d2):
        self.alpha, self.d1, self.d2 = alpha, d1, d2

    def beta(self, x):
        a = self.alpha(x)
        s = 1.0 + a
        a1, a2 = self.d1(x), self.d2(x)
        b0 = a / s**2
        b1 = a1 * (1.0 - a) / s**3
        b2 = (a2 * (1.0 - a * a) - a1 * a1 * (4.0 - 2.0 * a)) / s**4
        return b0, b1, b2


def _build(profile, bc_kind):
    P = profile

    def u_ex(x, y):
        b0 = P.beta(x)[0]
        return y - b0 * y * y

    def grad_u_ex(x, y):
        b0, b1, _ = P.beta(x)
        return np.stack(np.broadcast_arrays(-b1 * y * y, 1.0 - 2.0 * b0 * y), axis=-1)

    def laplace_u_ex(x, y):
        b0, _, b2 = P.beta(x)
        return -b2 * y * y - 2.0 * b0

    def f(x, y):
        return -laplace_u_ex(x, y)

    def _q(x):
        a1, a2 = P.d1(x), P.d2(x)
        q = 1.0 / np.sqrt(1.0 + a1 * a1)
        return q, -a1 * a2 * q**3

    def g(x, y):
        b0, b1, _ = P.beta(x)
        q, _ = _q(x)
        return (P.d1(x) * b1 * y * y + 1.0 - 2.0 * b0 * y) * q

    def grad_g(x, y):
        b0, b1, b2 = P.beta(x)
        a1, a2 = P.d1(x), P.d2(x)
        q, dq = _q(x)
        inner = a1 * b1 * y * y + 1.0 - 2.0 * b0 * y
        gx = (a2 * b1 * y * y + a1 * b2 * y * y - 2.0 * b1 * y) * q + inner * dq
        gy = (2.0 * a1 * b1 * y - 2.0 * b0) * q
        return np.stack(np.broadcast_arrays(gx, gy), axis=-1)

    def h(x, y):
        return np.asarray(y, dtype=float) * np.ones_like(np.asarray(x, dtype=float))

    problem = ProblemData(f=f, g=g, grad_g=grad_g, h_fixed=h, h0=1.0,
                          bc_kind=bc_kind, exact_boundary=profile.alpha)
    sol = ManufacturedSolution(u_ex, grad_u_ex, laplace_u_ex, profile.alpha, profile.d1)
    return problem, sol


_PARABOLA = _Profile(
    lambda x: 0.25 * x * (1.0 - x),
    lambda x: 0.25 - 0.5 * x,
    lambda x: -0.5 + 0.0 * x,
)

_TWO_PI = 2.0 * np.pi
_SINE = _Profile(
    lambda x: np.sin(_TWO_PI * x) / 16.0,
    lambda x: _TWO_PI * np.cos(_TWO_PI * x) / 16.0,
    lambda x: -_TWO_PI**2 * np.sin(_TWO_PI * x) / 16.0,
)


def test1_problem():
    """Parabolic boundary ``y = 1 + x(1-x)/4``, Dirichlet lateral sides."""
    return _build(_PARABOLA, "dirichlet")


def test2_problem():
    """Sinusoidal boundary ``y = 1 + sin(2 pi x)/16``, Dirichlet lateral sides."""
    return _build(_SINE, "dirichlet")


def test3_problem():
    """Test 2 data with periodic lateral sides."""
    return _build(_SINE, "periodic")


PROBLEMS = {1: test1_problem, 2: test2_problem, 3: test3_problem}
