"""Method-of-lines construction of Bach-flat nilpotent structures.

``xi`` is marched in ``x1`` from ``P1(xi) = 0`` and then ``alpha`` from
``P2(xi, alpha) = 0`` with state ``(alpha, alpha^(1,0))``. ``x2`` is periodic
and differentiated with fourth-order central differences; ``x1`` uses RK4
(or a second-order Heun step for cross-checks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bachflat import p1_formula, p1_rhs, p2_formula, p2_lower
from .curvature import curvature_pack
from .expr import Point4, as_field
from .extension import DeformationField, NilpotentSpec, build_metric
from .jets import Jet
from .surface import GAMMA_KEYS, AffineSurface


class PDEAbort(RuntimeError):
    """Numerical abort: CFL violation, blow-up or a vanishing ``alpha``."""


@dataclass(frozen=True)
class StripGrid:
    """``x1`` in ``[x1_start, x1_start + length]`` with ``n1`` steps; ``x2`` periodic with ``n2`` nodes."""

    length: float = 1.0
    n1: int = 128
    n2: int = 64
    x1_start: float = 0.0
    period: float = 2 * math.pi

    def __post_init__(self):
        if self.n2 < 8 or self.n2 % 2:
            raise ValueError("n2 must be even and at least 8")
        if self.n1 < 1 or self.length <= 0:
            raise ValueError("need a positive strip length and n1 >= 1")

    @property
    def h1(self) -> float:
        return self.length / self.n1

    @property
    def h2(self) -> float:
        return self.period / self.n2

    @property
    def x1(self) -> np.ndarray:
        return self.x1_start + self.h1 * np.arange(self.n1 + 1)

    @property
    def x2(self) -> np.ndarray:
        return self.h2 * np.arange(self.n2)

    def refine(self) -> "StripGrid":
        return StripGrid(self.length, 2 * self.n1, 2 * self.n2, self.x1_start, self.period)


@dataclass
class FieldOnGrid:
    """Node values; ``values[i, j]`` sits at ``(x1[i], x2[j])``.

    ``dx1`` holds the marched ``x1`` derivative where the solver has it.
    """

    grid: StripGrid
    values: np.ndarray
    dx1: np.ndarray
    meta: dict = field(default_factory=dict)

    def check_finite(self):
        if not np.all(np.isfinite(self.values)):
            raise PDEAbort("non-finite values in field")


def d2_periodic(u: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Fourth-order first derivative along a periodic axis."""
    r = lambda k: np.roll(u, -k, axis=axis)  # noqa: E731
    return (-r(2) + 8 * r(1) - 8 * r(-1) + r(-2)) / (12 * h)


def d22_periodic(u: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Fourth-order second derivative along a periodic axis."""
    r = lambda k: np.roll(u, -k, axis=axis)  # noqa: E731
    return (-r(2) + 16 * r(1) - 30 * u + 16 * r(-1) - r(-2)) / (12 * h * h)


def d1_interior(u: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative along axis 0; two edge rows on each side are NaN."""
    out = np.full(u.shape, np.nan)
    out[2:-2] = (u[:-4] - 8 * u[1:-3] + 8 * u[3:-1] - u[4:]) / (12 * h)
    return out


def d11_interior(u: np.ndarray, h: float) -> np.ndarray:
    out = np.full(u.shape, np.nan)
    out[2:-2] = (-u[:-4] + 16 * u[1:-3] - 30 * u[2:-2] + 16 * u[3:-1] - u[4:]) / (12 * h * h)
    return out


def _line_values(expr, x1: float, x2: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(as_field(expr).jet(Point4(x1, x2), 0).value, float),
                           x2.shape).copy()


class _Christoffel:
    """Christoffel values and first derivatives along one ``x1 = const`` line, cached."""

    def __init__(self, surface: AffineSurface, x2: np.ndarray):
        self.surface, self.x2 = surface, x2
        self._cache: dict[float, tuple] = {}

    def __call__(self, x1: float):
        key = float(x1)
        if key not in self._cache:
            e = self.surface.entry_jets(Point4(np.full_like(self.x2, key), self.x2), 1)
            shape = self.x2.shape

            def vals(fn):
                return {k: np.broadcast_to(np.asarray(fn(e[k]), float), shape) for k in GAMMA_KEYS}

            self._cache[key] = (vals(lambda j: j.value), vals(lambda j: j.partial((1, 0, 0, 0))),
                                vals(lambda j: j.partial((0, 1, 0, 0))))
            if len(self._cache) > 64:
                self._cache.pop(next(iter(self._cache)))
        return self._cache[key]


def _step(rhs, t: float, y, h: float, method: str):
    if method == "rk4":
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if method == "rk2":
        k1 = rhs(t, y)
        k2 = rhs(t + h, y + h * k1)
        return y + 0.5 * h * (k1 + k2)
    raise ValueError(f"unknown method {method!r}")


def solve_p1(surface: AffineSurface, xi0, grid: StripGrid, method: str = "rk4",
             cfl: float = 0.5, cap: float = 1e6) -> FieldOnGrid:
    """March ``xi^(1,0) = xi xi^(0,1) + f(xi, Gamma)`` from ``xi(x1_start, .) = xi0``."""
    x2 = grid.x2
    gam = _Christoffel(surface, x2)

    def rhs(t, xi):
        G, _, _ = gam(t)
        return p1_rhs(xi, d2_periodic(xi, grid.h2), G)

    xi = _line_values(xi0, grid.x1_start, x2)
    out = np.empty((grid.n1 + 1, grid.n2))
    dout = np.empty_like(out)
    for i, t in enumerate(grid.x1):
        if np.max(np.abs(xi)) * grid.h1 / grid.h2 > cfl:
            raise PDEAbort(f"CFL violated at x1 = {t:.4g}: max|xi| h1/h2 = "
                           f"{np.max(np.abs(xi)) * grid.h1 / grid.h2:.3g} > {cfl}")
        if not np.all(np.isfinite(xi)) or np.max(np.abs(xi)) > cap:
            raise PDEAbort(f"xi blew up near x1 = {t:.4g}")
        out[i] = xi
        dout[i] = rhs(t, xi)
        if i < grid.n1:
            xi = _step(rhs, t, xi, grid.h1, method)
    return FieldOnGrid(grid, out, dout, {"xi0": str(xi0), "method": method})


def _hermite(f0, f1, d0, d1, h: float, s: float):
    """Cubic Hermite interpolation at fraction ``s`` of a step of length ``h``."""
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1


def solve_p2(surface: AffineSurface, xi: FieldOnGrid, alpha0, alpha1, grid: StripGrid | None = None,
             method: str = "rk4", alpha_floor: float = 1e-6, cap: float = 1e6) -> FieldOnGrid:
    """March ``alpha`` with state ``(alpha, alpha^(1,0))`` along the solved ``xi``.

    ``xi`` between grid lines comes from cubic Hermite interpolation of its
    node values and marched ``x1`` derivative.
    """
    grid = grid or xi.grid
    if grid != xi.grid:
        raise ValueError("xi lives on a different grid")
    x2 = grid.x2
    h1, h2 = grid.h1, grid.h2
    gam = _Christoffel(surface, x2)
    x1s = grid.x1

    def xi_at(t):
        i = min(int(math.floor((t - grid.x1_start) / h1 + 1e-9)), grid.n1 - 1)
        s = (t - x1s[i]) / h1
        if abs(s) < 1e-12:
            return xi.values[i]
        if abs(s - 1) < 1e-12:
            return xi.values[i + 1]
        return _hermite(xi.values[i], xi.values[i + 1], xi.dx1[i], xi.dx1[i + 1], h1, s)

    def rhs(t, state):
        a, b = state
        if np.min(np.abs(a)) < alpha_floor:
            raise PDEAbort(f"|alpha| < {alpha_floor:g} near x1 = {t:.4g}")
        z = xi_at(t)
        G, G10, G01 = gam(t)
        z01 = d2_periodic(z, h2)
        a01 = d2_periodic(a, h2)
        a02 = d22_periodic(a, h2)
        a11 = d2_periodic(b, h2)
        low = p2_lower(z, z01, a, b, a01, G, G10, G01)
        a20 = 2 * z * a11 - z**2 * a02 - low / a
        return np.stack([b, a20])

    state = np.stack([_line_values(alpha0, grid.x1_start, x2), _line_values(alpha1, grid.x1_start, x2)])
    vals = np.empty((grid.n1 + 1, grid.n2))
    dvals = np.empty_like(vals)
    for i, t in enumerate(x1s):
        if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > cap:
            raise PDEAbort(f"alpha blew up near x1 = {t:.4g}")
        vals[i], dvals[i] = state
        if i < grid.n1:
            state = _step(rhs, t, state, h1, method)
    return FieldOnGrid(grid, vals, dvals, {"alpha0": str(alpha0), "alpha1": str(alpha1),
                                           "method": method})


# residuals -------------------------------------------------------------------

def _christoffel_grid(surface: AffineSurface, grid: StripGrid):
    X1, X2 = np.meshgrid(grid.x1, grid.x2, indexing="ij")
    e = surface.entry_jets(Point4(X1, X2), 1)
    shape = X1.shape

    def vals(fn):
        return {k: np.broadcast_to(np.asarray(fn(e[k]), float), shape) for k in GAMMA_KEYS}

    return vals(lambda j: j.value), vals(lambda j: j.partial((1, 0, 0, 0))), \
        vals(lambda j: j.partial((0, 1, 0, 0)))


def p1_residual(surface: AffineSurface, xi: FieldOnGrid) -> float:
    """``max |P1|`` on nodes at least two rows from either end, all by grid stencils."""
    g = xi.grid
    G, _, _ = _christoffel_grid(surface, g)
    u = xi.values
    r = p1_formula(u, d1_interior(u, g.h1), d2_periodic(u, g.h2), G)
    return float(np.nanmax(np.abs(r[2:-2])))


def p2_residual(surface: AffineSurface, xi: FieldOnGrid, alpha: FieldOnGrid) -> float:
    g = xi.grid
    G, G10, G01 = _christoffel_grid(surface, g)
    z, a = xi.values, alpha.values
    a10 = d1_interior(a, g.h1)
    r = p2_formula(z, d2_periodic(z, g.h2), a, a10, d2_periodic(a, g.h2),
                   d11_interior(a, g.h1), d2_periodic(a10, g.h2), d22_periodic(a, g.h2),
                   G, G10, G01)
    return float(np.nanmax(np.abs(r[2:-2])))


# bridging grid fields to jets ---------------------------------------------------

_FIT_MONOMIALS = [(a, b) for k in range(5) for a in range(k, -1, -1) for b in [k - a]]


def _fit_operator() -> np.ndarray:
    """Least-squares map from 5x5 stencil values to scaled degree-4 coefficients."""
    offs = [(i, j) for i in range(-2, 3) for j in range(-2, 3)]
    A = np.array([[i**a * j**b for a, b in _FIT_MONOMIALS] for i, j in offs], float)
    return np.linalg.pinv(A)


_FIT_OPERATOR = _fit_operator()


def fit_stride(grid: StripGrid) -> int:
    """Row stride giving an ``x1`` stencil spacing as close as possible to ``h2``."""
    return max(1, int(round(grid.h2 / grid.h1)))


class PolynomialField:
    """A bivariate polynomial ``sum c_ab (x1 - c1)^a (x2 - c2)^b`` usable as a scalar field."""

    def __init__(self, center: tuple[float, float], coeffs: dict[tuple[int, int], float]):
        self.center = (float(center[0]), float(center[1]))
        self.coeffs = dict(coeffs)

    @classmethod
    def fit(cls, values: np.ndarray, grid: StripGrid, i: int, j: int,
            stride: int | None = None) -> "PolynomialField":
        """Degree-4 least-squares fit on a 5x5 stencil centred at node ``(i, j)``.

        Rows of the stencil are ``stride`` nodes apart (default: spacing close
        to ``h2``) so that fourth derivatives are not swamped by marching error.
        """
        stride = fit_stride(grid) if stride is None else stride
        if i < 2 * stride or i > grid.n1 - 2 * stride:
            raise ValueError("stencil leaves the strip; only interior nodes can be fitted")
        rows = values[[i + stride * k for k in range(-2, 3)]]
        cols = [(j + k) % grid.n2 for k in range(-2, 3)]
        stencil = rows[:, cols].reshape(-1)
        c = _FIT_OPERATOR @ stencil
        h1 = grid.h1 * stride
        coeffs = {(a, b): float(c[n]) / (h1**a * grid.h2**b)
                  for n, (a, b) in enumerate(_FIT_MONOMIALS)}
        return cls((grid.x1[i], grid.x2[j]), coeffs)

    def jet(self, p: Point4, order: int) -> Jet:
        p = Point4(*p)
        u = Jet.variable(p.x1, 0, order) - self.center[0]
        v = Jet.variable(p.x2, 1, order) - self.center[1]
        out = Jet.constant(0.0, order)
        for (a, b), c in self.coeffs.items():
            out = out + (u**a) * (v**b) * c
        return out


@dataclass
class BachGridReport:
    max_bach: float
    nodes: list
    fiber_points: list
    per_node: list

    def as_dict(self) -> dict:
        return {"max_bach": self.max_bach, "nodes": self.nodes,
                "fiber_points": self.fiber_points, "per_node": self.per_node}


def verify_bach_on_grid(surface: AffineSurface, xi: FieldOnGrid, alpha: FieldOnGrid,
                        deformation: DeformationField | None = None, nodes=None,
                        fiber=((0.3, -0.2), (-0.5, 0.7))) -> BachGridReport:
    """``max |B|`` over interior ``nodes`` (index pairs) and ``fiber`` samples."""
    g = xi.grid
    if nodes is None:
        nodes = default_check_nodes(g)
    per = []
    worst = 0.0
    for i, j in nodes:
        spec = NilpotentSpec(PolynomialField.fit(alpha.values, g, i, j),
                             PolynomialField.fit(xi.values, g, i, j))
        metric = build_metric(surface, spec, deformation)
        m = 0.0
        for y1, y2 in fiber:
            b = curvature_pack(metric, Point4(g.x1[i], g.x2[j], y1, y2)).bach
            m = max(m, float(np.max(np.abs(b))))
        per.append(m)
        worst = max(worst, m)
    return BachGridReport(worst, [list(map(int, n)) for n in nodes], [list(f) for f in fiber], per)


def default_check_nodes(grid: StripGrid, x1_fracs=(0.25, 0.5, 0.75), every: int = 8):
    """Nodes at fixed physical positions so refinements compare like with like."""
    out = []
    step2 = max(1, grid.n2 // every)
    margin = 2 * fit_stride(grid)
    for fr in x1_fracs:
        i = int(round(fr * grid.n1))
        i = min(max(i, margin), grid.n1 - margin)
        for j in range(0, grid.n2, step2):
            out.append((i, j))
    return out


@dataclass
class ConvergenceReport:
    h: list
    max_bach: list
    p1_residual: list
    p2_residual: list

    @property
    def ratios(self) -> list:
        b = self.max_bach
        return [b[k] / b[k + 1] if b[k + 1] > 0 else math.inf for k in range(len(b) - 1)]

    def as_dict(self) -> dict:
        return {"h": self.h, "max_bach": self.max_bach, "ratios": self.ratios,
                "p1_residual": self.p1_residual, "p2_residual": self.p2_residual}


def solve_and_verify(surface: AffineSurface, xi0, alpha0, alpha1, grid: StripGrid,
                     deformation=None, method: str = "rk4"):
    xi = solve_p1(surface, xi0, grid, method)
    alpha = solve_p2(surface, xi, alpha0, alpha1, grid, method)
    return xi, alpha, verify_bach_on_grid(surface, xi, alpha, deformation)


def convergence_study(surface: AffineSurface, xi0, alpha0, alpha1, grid: StripGrid,
                      levels: int = 2, deformation=None, method: str = "rk4") -> ConvergenceReport:
    """Solve and verify on ``grid`` and ``levels - 1`` successive refinements."""
    rep = ConvergenceReport([], [], [], [])
    g = grid
    for _ in range(levels):
        xi, alpha, bach = solve_and_verify(surface, xi0, alpha0, alpha1, g, deformation, method)
        rep.h.append(g.h1)
        rep.max_bach.append(bach.max_bach)
        rep.p1_residual.append(p1_residual(surface, xi))
        rep.p2_residual.append(p2_residual(surface, xi, alpha))
        g = g.refine()
    return rep


def sup_difference(coarse: FieldOnGrid, fine: FieldOnGrid) -> float:
    """``max |u_coarse - u_fine|`` on the coarse nodes (``fine`` refines ``coarse`` twice over)."""
    return float(np.max(np.abs(coarse.values - fine.values[::2, ::2])))


def method_agreement(surface: AffineSurface, xi0, grid: StripGrid, levels: int = 3) -> list[float]:
    """``max |xi_rk2 - xi_rk4|`` as ``h1`` halves with ``x2`` fixed; shrinks like ``h1^2``."""
    out = []
    g = grid
    for _ in range(levels):
        a = solve_p1(surface, xi0, g, "rk2")
        b = solve_p1(surface, xi0, g, "rk4")
        out.append(float(np.max(np.abs(a.values - b.values))))
        g = StripGrid(g.length, 2 * g.n1, g.n2, g.x1_start, g.period)
    return out
