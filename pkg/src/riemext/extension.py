"""Modified Riemannian extensions ``g_{T, nabla, Phi}`` on the cotangent bundle.

Coordinates are ordered ``(x1, x2, y1, y2)`` (indices 0..3). The metric is

    g = 2 dx^i o dy_i + { 1/2 y_r y_s (T^r_i T^s_j + T^r_j T^s_i) - 2 y_k Gamma_ij^k + Phi_ij } dx^i o dx^j

so ``g(d_xi, d_yj) = delta_ij``, the fiber block vanishes and the horizontal
block is the bracket.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import jets
from .expr import Num, Point4, as_field
from .jets import Jet
from .surface import AffineSurface, flat_surface


class EndoField:
    """A (1,1)-tensor ``T = T^r_i d_xr (x) dx^i`` given by four scalar fields.

    ``t[r][i]`` holds ``T^r_i`` (0-based).
    """

    def __init__(self, t, constants: Mapping[str, float] | None = None):
        self.t = tuple(tuple(as_field(t[r][i], constants) for i in range(2)) for r in range(2))

    def jet(self, p: Point4, order: int) -> Jet:
        rows = [Jet.stack([self.t[r][i].jet(p, order) for i in range(2)]) for r in range(2)]
        return Jet.stack(rows)

    def value(self, p: Point4) -> np.ndarray:
        return self.jet(p, 0).value

    def scaled(self, s: float) -> "EndoField":
        return _ScaledEndo(self, s)


class _ScaledEndo(EndoField):
    def __init__(self, base: EndoField, s: float):
        self.base, self.s = base, float(s)

    def jet(self, p, order):
        return self.base.jet(p, order) * self.s


def canonical_endo() -> EndoField:
    """``T = d_x1 (x) dx^2``."""
    return EndoField([[0.0, 1.0], [0.0, 0.0]])


def mirrored_endo() -> EndoField:
    """``T = d_x2 (x) dx^1``."""
    return EndoField([[0.0, 0.0], [1.0, 0.0]])


def scalar_endo(f, constants=None) -> EndoField:
    f = as_field(f, constants)
    return EndoField([[f, 0.0], [0.0, f]])


class NilpotentSpec(EndoField):
    """``T = alpha * [[xi, 1], [-xi^2, -xi]]``; squares to zero identically."""

    def __init__(self, alpha, xi, constants: Mapping[str, float] | None = None):
        self.alpha = as_field(alpha, constants)
        self.xi = as_field(xi, constants)

    def jet(self, p: Point4, order: int) -> Jet:
        a = self.alpha.jet(p, order)
        x = self.xi.jet(p, order)
        ax = a * x
        return Jet.stack([Jet.stack([ax, a]), Jet.stack([-(ax * x), -ax])])


class PiecewiseS23Endo(EndoField):
    """``alpha(x2) Id`` for ``x2 <= 0`` and ``alpha(x2) d_x1 (x) dx^2`` for ``x2 > 0``."""

    def __init__(self, alpha, constants=None):
        self.alpha = as_field(alpha, constants)

    def jet(self, p: Point4, order: int) -> Jet:
        if np.ndim(p[1]) != 0:
            raise ValueError("piecewise endomorphism is evaluated pointwise")
        a = self.alpha.jet(p, order)
        z = a * 0.0
        if p[1] <= 0:
            return Jet.stack([Jet.stack([a, z]), Jet.stack([z, a])])
        return Jet.stack([Jet.stack([z, a]), Jet.stack([z, z])])


@dataclass(frozen=True)
class DeformationField:
    """Symmetric 2-tensor ``Phi`` (three stored entries)."""

    phi11: object = Num(0.0)
    phi12: object = Num(0.0)
    phi22: object = Num(0.0)

    @classmethod
    def from_exprs(cls, phi11=0.0, phi12=0.0, phi22=0.0, constants=None) -> "DeformationField":
        return cls(as_field(phi11, constants), as_field(phi12, constants), as_field(phi22, constants))

    def jet(self, p: Point4, order: int) -> Jet:
        a, b, c = (as_field(f).jet(p, order) for f in (self.phi11, self.phi12, self.phi22))
        return Jet.stack([Jet.stack([a, b]), Jet.stack([b, c])])


ZERO_DEFORMATION = DeformationField()


@dataclass(frozen=True)
class ExtensionMetric:
    """Evaluator for ``g_{T, nabla, Phi}``; ``jet(p, K)`` gives the 4x4 metric jet."""

    surface: AffineSurface
    endo: EndoField
    deformation: DeformationField = ZERO_DEFORMATION

    def jet(self, p: Point4, order: int = 4) -> Jet:
        p = Point4(*p).check()
        self.surface.check_domain(p)
        gamma = self.surface.christoffel_at(p, order)
        t = self.endo.jet(p, order)
        phi = self.deformation.jet(p, order)
        y = Jet.stack([Jet.variable(p[2], 2, order), Jet.variable(p[3], 3, order)])
        v = jets.einsum("r,ri->i", y, t)  # v_i = y_r T^r_i
        horiz = jets.einsum("i,j->ij", v, v) - 2.0 * jets.einsum("k,ijk->ij", y, gamma) + phi
        g = np.zeros((4, 4, jets.ncoef(order)))
        g[:2, :2] = horiz.coeffs
        g[0, 2, 0] = g[2, 0, 0] = g[1, 3, 0] = g[3, 1, 0] = 1.0
        return Jet(g)

    def value(self, p: Point4) -> np.ndarray:
        return self.jet(p, 0).value

    def signature(self, p: Point4) -> tuple[int, int]:
        ev = np.linalg.eigvalsh(self.value(p))
        return int(np.sum(ev > 0)), int(np.sum(ev < 0))

    def with_deformation(self, deformation: DeformationField) -> "ExtensionMetric":
        return ExtensionMetric(self.surface, self.endo, deformation)


def build_metric(surface: AffineSurface | None = None, endo: EndoField | None = None,
                 deformation: DeformationField | None = None) -> ExtensionMetric:
    """Assemble ``g_{T, nabla, Phi}``; omitted parts default to flat, zero, zero."""
    surface = surface if surface is not None else flat_surface()
    endo = endo if endo is not None else EndoField([[0.0, 0.0], [0.0, 0.0]])
    deformation = deformation if deformation is not None else ZERO_DEFORMATION
    for name, part in (("surface", surface), ("endomorphism", endo), ("deformation", deformation)):
        if not hasattr(part, "jet") and not isinstance(part, AffineSurface):
            raise TypeError(f"{name} has no jet evaluator")
    return ExtensionMetric(surface, endo, deformation)


class ScaledMetric:
    """``phi^{-2} g`` for a positive scalar field ``phi`` (or a positive constant)."""

    def __init__(self, base, phi):
        self.base = base
        self.phi = phi

    def jet(self, p: Point4, order: int = 4) -> Jet:
        g = self.base.jet(p, order)
        if isinstance(self.phi, (int, float)):
            if self.phi <= 0:
                raise ValueError("conformal factor must be positive")
            return g * (1.0 / self.phi**2)
        f = self.phi.jet(p, order)
        if f.value <= 0:
            raise ValueError(f"conformal factor {f.value} is not positive at {tuple(p)}")
        w = f ** -2
        return Jet(g.coeffs.copy()) * w

    def value(self, p):
        return self.jet(p, 0).value


# pointwise Jordan classification -----------------------------------------

class JordanType(enum.Enum):
    ZERO = "Zero"
    SCALAR_MULTIPLE = "ScalarMultiple"
    NILPOTENT_NONZERO = "NilpotentNonzero"
    GENERIC_NON_SCALAR = "GenericNonScalar"


@dataclass(frozen=True)
class PointClass:
    kind: JordanType
    eigenvalues: tuple[complex, complex]


def classify_matrix(t: np.ndarray, tol: float = 1e-10) -> PointClass:
    t = np.asarray(t, dtype=float)
    tr = float(np.trace(t))
    det = float(np.linalg.det(t))
    disc = complex(tr * tr - 4 * det)
    root = np.sqrt(disc)
    lam = ((tr + root) / 2, (tr - root) / 2)
    lam = tuple(complex(x).real if abs(complex(x).imag) < tol else complex(x) for x in lam)
    deviation = np.max(np.abs(t - 0.5 * tr * np.eye(2)))
    if deviation < tol:
        kind = JordanType.ZERO if abs(tr) < tol else JordanType.SCALAR_MULTIPLE
    elif abs(tr) < tol and abs(det) < tol * max(1.0, np.max(np.abs(t))):
        kind = JordanType.NILPOTENT_NONZERO
    else:
        kind = JordanType.GENERIC_NON_SCALAR
    return PointClass(kind, lam)


def classify_point(endo: EndoField, p: Point4, tol: float = 1e-10) -> PointClass:
    """Jordan type of ``T(p)``: zero, scalar multiple, nilpotent or generic."""
    return classify_matrix(endo.value(p), tol)


class SurfaceConditionError(ValueError):
    pass


def mixed_jordan_example(alpha="x2^6", surface: AffineSurface | None = None,
                         deformation: DeformationField | None = None,
                         check_points=None, tol: float = 1e-10) -> ExtensionMetric:
    """Metric whose endomorphism is scalar for ``x2 <= 0`` and nilpotent for ``x2 > 0``.

    The surface must satisfy ``Gamma_11^2 = 0`` and
    ``(Gamma_11^1)^2 - Gamma_11^1 Gamma_12^2 + d_x1(Gamma_11^1 - Gamma_12^2) = 0``;
    this is checked at ``check_points``.
    """
    surface = surface if surface is not None else flat_surface()
    if check_points is None:
        check_points = [Point4(a, b) for a in (-0.7, 0.3, 1.1) for b in (-0.9, 0.2, 0.8)]
    for p in check_points:
        e = surface.entry_jets(p, 1)
        r1 = abs(e["G11_2"].value)
        g111, g122 = e["G11_1"], e["G12_2"]
        r2 = abs(g111.value**2 - g111.value * g122.value + (g111 - g122).partial((1, 0, 0, 0)))
        if r1 > tol or r2 > tol:
            raise SurfaceConditionError(
                f"surface violates the Bach-flat relations at {tuple(p)}: residuals {r1:.3g}, {r2:.3g}")
    return build_metric(surface, PiecewiseS23Endo(alpha), deformation)
