"""Fixed-step RK4 integration and ODE-defined profiles usable as scalar fields."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import jets
from .expr import Point4, as_field
from .jets import Jet


def rk4_step(rhs: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_integrate(rhs: Callable, t0: float, y0, t1: float, max_step: float = 1e-2) -> np.ndarray:
    """State at ``t1`` starting from ``y0`` at ``t0``; works backwards too."""
    y = np.asarray(y0, dtype=float)
    span = t1 - t0
    if span == 0:
        return y.copy()
    n = max(1, int(np.ceil(abs(span) / max_step)))
    h = span / n
    t = t0
    for _ in range(n):
        y = rk4_step(rhs, t, y, h)
        t += h
    return y


class LinearProfile:
    """``P(x2)`` with ``2 P'' + A(x2) P = 0`` and ``P(0) = p0``, ``P'(0) = p1``.

    ``jet`` integrates the state to the requested ``x2`` with RK4 and then
    builds the Taylor series in ``x2`` from the ODE itself, so the field can
    enter any expression-level computation. ``A`` may be any field of ``x2``.
    """

    def __init__(self, A, p0: float, p1: float, max_step: float = 1e-3):
        self.A = as_field(A)
        self.p0, self.p1 = float(p0), float(p1)
        self.max_step = max_step

    def _a(self, t: float) -> float:
        return float(self.A.jet(Point4(0.0, t), 0).value)

    def state(self, x2: float) -> np.ndarray:
        def rhs(t, y):
            return np.array([y[1], -0.5 * self._a(t) * y[0]])

        return rk4_integrate(rhs, 0.0, [self.p0, self.p1], float(x2), self.max_step)

    def jet(self, p: Point4, order: int) -> Jet:
        p = Point4(*p)
        if np.ndim(p.x2) != 0:
            raise ValueError("LinearProfile evaluates at scalar points only")
        p0, p1 = self.state(p.x2)
        a_jet = self.A.jet(p, order)
        a = [float(a_jet.coefficient((0, n, 0, 0))) for n in range(order + 1)]
        c = [p0, p1] + [0.0] * max(0, order - 1)
        for n in range(order - 1):
            conv = sum(a[j] * c[n - j] for j in range(n + 1))
            c[n + 2] = -0.5 * conv / ((n + 2) * (n + 1))
        coeffs = np.zeros(jets.ncoef(order))
        for n in range(order + 1):
            coeffs[jets.INDEX[(0, n, 0, 0)]] = c[n]
        return Jet(coeffs)

    def __repr__(self):
        return f"LinearProfile(A={self.A}, p0={self.p0:g}, p1={self.p1:g})"


class ProductField:
    """Pointwise product of two scalar fields."""

    def __init__(self, left, right):
        self.left, self.right = as_field(left), as_field(right)

    def jet(self, p: Point4, order: int) -> Jet:
        return self.left.jet(p, order) * self.right.jet(p, order)

    def __repr__(self):
        return f"({self.left!r})*({self.right!r})"
