"""Affine surfaces: Christoffel data, affine curvature and Ricci tensor.

Christoffel symbols are indexed ``gamma[i, j, k] = Gamma_ij^k`` with 0-based
indices (``0 -> x1``, ``1 -> x2``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import jets
from .expr import Node, Num, Point4, as_field, parse_expr
from .jets import Jet

#: Sign applied to trace(X -> R(X,Y)Z); +1 reproduces rho = -(dx1 - dx2)^2 for
#: the Gamma_12^1 = Gamma_12^2 = 1 surface.
AFFINE_RICCI_SIGN = 1.0

#: Storage order of the six independent Christoffel symbols.
GAMMA_KEYS = ("G11_1", "G11_2", "G12_1", "G12_2", "G22_1", "G22_2")
_KEY_INDEX = {"G11_1": (0, 0, 0), "G11_2": (0, 0, 1), "G12_1": (0, 1, 0),
              "G12_2": (0, 1, 1), "G22_1": (1, 1, 0), "G22_2": (1, 1, 1)}


class DomainError(ValueError):
    pass


def riemann_operator(gamma: Jet) -> Jet:
    """Components ``R[i, j, k, l]`` of ``R(d_i, d_j) d_k = R[i,j,k,l] d_l``.

    Uses ``R(X,Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y]`` and works
    in any dimension; ``gamma[i, j, k] = Gamma_ij^k``.
    """
    n = gamma.shape[0]
    dgamma = Jet(np.stack([gamma.d(v).coeffs for v in range(jets.NVARS)], axis=0))[:n]
    # dgamma[i, j, k, l] = d_i Gamma_jk^l
    quad = jets.einsum("jkm,iml->ijkl", gamma, gamma)
    lin = dgamma - dgamma.transpose(1, 0, 2, 3)
    return lin + quad - quad.transpose(1, 0, 2, 3)


def ricci_from_operator(r: Jet) -> Jet:
    """``rho[j, k] = sum_i R[i, j, k, i]`` (trace of X -> R(X, d_j) d_k)."""
    n = r.shape[0]
    return Jet(sum(r.coeffs[i, :, :, i] for i in range(n)))


@dataclass(frozen=True)
class AffineRicci:
    rho: np.ndarray
    symmetric: np.ndarray
    antisymmetric: np.ndarray


@dataclass(frozen=True)
class FlatnessReport:
    flat: bool
    max_curvature: float
    per_sample: tuple[float, ...]


@dataclass(frozen=True)
class AffineSurface:
    """Torsion-free connection on a rectangle of the (x1, x2) plane.

    ``gamma`` maps each key of :data:`GAMMA_KEYS` to a scalar field; the
    symmetric partners ``Gamma_21^k`` share the stored entry.
    """

    gamma: Mapping[str, object]
    domain: tuple[tuple[float, float], tuple[float, float]] = ((-np.inf, np.inf), (-np.inf, np.inf))
    kind: str = "explicit"
    params: Mapping[str, float] = field(default_factory=dict)

    def check_domain(self, p: Point4) -> None:
        (a, b), (c, d) = self.domain
        x1, x2 = np.asarray(p[0]), np.asarray(p[1])
        if np.any(x1 < a) or np.any(x1 > b) or np.any(x2 < c) or np.any(x2 > d):
            raise DomainError(f"point {tuple(p)} outside the surface domain {self.domain}")

    def entry_jets(self, p: Point4, order: int) -> dict[str, Jet]:
        return {k: as_field(self.gamma[k]).jet(p, order) for k in GAMMA_KEYS}

    def christoffel_at(self, p: Point4, order: int = 4) -> Jet:
        """Jets of ``Gamma_ij^k`` at ``p``, shape ``(2, 2, 2)``.

        Array-valued points append their shape after the three tensor axes.
        """
        p = Point4(*p)
        self.check_domain(p)
        entries = self.entry_jets(p, order)
        proto = next(iter(entries.values()))
        out = np.zeros((2, 2, 2) + proto.coeffs.shape)
        for key, (i, j, k) in _KEY_INDEX.items():
            c = np.broadcast_to(entries[key].coeffs, proto.coeffs.shape)
            out[i, j, k] = c
            out[j, i, k] = c
        return Jet(out)

    def curvature_at(self, p: Point4, order: int = 2) -> Jet:
        """Affine curvature operator components as jets of order ``order``."""
        return riemann_operator(self.christoffel_at(p, order + 1))

    def ricci_affine(self, p: Point4) -> AffineRicci:
        rho = AFFINE_RICCI_SIGN * ricci_from_operator(self.curvature_at(p, 0)).value
        return AffineRicci(rho, 0.5 * (rho + rho.T), 0.5 * (rho - rho.T))

    def is_flat(self, samples: Sequence[Point4], tol: float = 1e-10) -> FlatnessReport:
        if len(samples) == 0:
            raise ValueError("is_flat needs at least one sample point")
        norms = tuple(float(np.max(np.abs(self.curvature_at(p, 0).value))) for p in samples)
        return FlatnessReport(all(n < tol for n in norms), max(norms), norms)

    def with_gamma(self, **entries) -> "AffineSurface":
        g = dict(self.gamma)
        g.update({k: as_field(v) for k, v in entries.items()})
        return AffineSurface(g, self.domain, self.kind, self.params)


def explicit_surface(entries: Mapping[str, object] | None = None,
                     constants: Mapping[str, float] | None = None,
                     domain=None) -> AffineSurface:
    """Surface from expression strings (or numbers/fields); missing entries are zero."""
    entries = dict(entries or {})
    unknown = set(entries) - set(GAMMA_KEYS)
    if unknown:
        raise KeyError(f"unknown Christoffel keys {sorted(unknown)}")
    gamma = {k: as_field(entries.get(k, 0.0), constants) for k in GAMMA_KEYS}
    kw = {} if domain is None else {"domain": domain}
    return AffineSurface(gamma, kind="explicit", **kw)


def flat_surface() -> AffineSurface:
    return explicit_surface({})


def type_a(constants: Mapping[str, float]) -> AffineSurface:
    """Constant Christoffel symbols; missing keys default to zero."""
    vals = {k: float(constants.get(k, 0.0)) for k in GAMMA_KEYS}
    return AffineSurface({k: Num(v) for k, v in vals.items()}, kind="typeA", params=vals)


def type_b(constants: Mapping[str, float]) -> AffineSurface:
    """``Gamma_ij^k = C_ij^k / x1`` on ``x1 > 0``."""
    vals = {k: float(constants.get(k, 0.0)) for k in GAMMA_KEYS}
    gamma = {k: parse_expr(f"({v!r})/x1") for k, v in vals.items()}
    return AffineSurface(gamma, domain=((np.nextafter(0.0, 1.0), np.inf), (-np.inf, np.inf)),
                         kind="typeB", params=vals)


class _Remark12Entry:
    """Derived Christoffel entry of the remark12 family, built from phi and c at jet level."""

    def __init__(self, which: str, phi: Node, c: Node):
        self.which, self.phi, self.c = which, phi, c

    def jet(self, p: Point4, order: int) -> Jet:
        phi = self.phi.jet(p, order + 1)
        g111 = -phi.d(0)
        if self.which == "G11_1":
            return g111
        return g111 + self.c.jet(p, order) * jets.exp(phi.truncate(order))


def remark12_surface(phi, c, g12_1=0.0, g22_1=0.0, g22_2=0.0,
                     constants: Mapping[str, float] | None = None) -> AffineSurface:
    """Family satisfying the Bach-flat relations for ``T = d_x1 (x) dx2``.

    ``Gamma_11^2 = 0``, ``Gamma_11^1 = -d_x1 phi``, ``Gamma_12^2 = Gamma_11^1 + c e^phi``
    with ``c = c(x2)``; the other three symbols are free.
    """
    phi = as_field(phi, constants)
    c = as_field(c, constants)
    if isinstance(c, Node) and any(
            getattr(n, "name", None) in ("x1", "y1", "y2") for n in _walk(c)):
        raise ValueError("c must depend on x2 only")
    gamma = {
        "G11_1": _Remark12Entry("G11_1", phi, c),
        "G11_2": Num(0.0),
        "G12_1": as_field(g12_1, constants),
        "G12_2": _Remark12Entry("G12_2", phi, c),
        "G22_1": as_field(g22_1, constants),
        "G22_2": as_field(g22_2, constants),
    }
    return AffineSurface(gamma, kind="remark12")


def _walk(node: Node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(n.children())
