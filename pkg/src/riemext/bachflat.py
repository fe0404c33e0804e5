"""Bach-flatness criteria for nilpotent modified Riemannian extensions.

``p1_formula``/``p2_formula`` transcribe the two operators whose vanishing
characterizes Bach-flatness when ``T = alpha [[xi, 1], [-xi^2, -xi]]``. They
are plain arithmetic, so they run on floats (jet read-outs at a point) and on
numpy arrays (grid nodes of the PDE solver) alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .curvature import curvature_pack
from .expr import Point4
from .extension import ExtensionMetric, NilpotentSpec, build_metric, DeformationField
from .jets import JetOrderError
from .surface import GAMMA_KEYS, AffineSurface

_X1 = (1, 0, 0, 0)
_X2 = (0, 1, 0, 0)


def p1_formula(xi, xi10, xi01, G: Mapping[str, object]):
    """``P1(xi)``; ``G`` maps Christoffel keys to values."""
    return (-xi10 + xi * xi01
            + G["G22_1"] * xi**3
            - (2 * G["G12_1"] - G["G22_2"]) * xi**2
            + (G["G11_1"] - 2 * G["G12_2"]) * xi
            + G["G11_2"])


def p1_rhs(xi, xi01, G):
    """``xi^(1,0)`` solving ``P1(xi) = 0``."""
    return p1_formula(xi, 0.0, xi01, G)


def p2_principal(xi, a, a20, a11, a02):
    """Second-order part ``a a20 - 2 xi a a11 + xi^2 a a02``."""
    return a * a20 - 2 * xi * a * a11 + xi**2 * a * a02


def p2_lower(xi, xi01, a, a10, a01, G, G10, G01, displayed: bool = False):
    """Everything in ``P2`` except the second derivatives of ``alpha``.

    ``G10``/``G01`` are the x1/x2 derivatives of the Christoffel symbols.
    The ``a a10`` bracket opens with ``2 xi01``; ``displayed=True`` uses the
    printed ``2 xi a01`` instead, which breaks ``B22 = -4 P2`` (kept for tests).
    """
    lead = 2 * xi * a01 if displayed else 2 * xi01
    g111, g112 = G["G11_1"], G["G11_2"]
    g121, g122 = G["G12_1"], G["G12_2"]
    g221, g222 = G["G22_1"], G["G22_2"]
    a2 = a * a
    out = a10**2 + xi**2 * a01**2 - 2 * xi * a10 * a01
    out = out - a * a10 * (lead - 5 * g221 * xi**2 + 2 * (4 * g121 - g222) * xi
                           - 3 * g111 + 2 * g122)
    out = out + a * a01 * (2 * xi * xi01 - 6 * g221 * xi**3 + (10 * g121 - 3 * g222) * xi**2
                           - 4 * (g111 - g122) * xi - g112)
    out = out + 6 * xi**4 * a2 * g221**2
    out = out - 2 * xi**3 * a2 * (G01["G22_1"] + 9 * g121 * g221 - 3 * g221 * g222)
    out = out - xi**2 * a2 * (4 * g221 * xi01 - 3 * G01["G12_1"] - 2 * G10["G22_1"] + G01["G22_2"]
                              - 12 * g121**2 - g222**2 - 7 * g111 * g221 + 7 * g121 * g222
                              + 9 * g122 * g221)
    out = out + xi * a2 * (2 * (3 * g121 - g222) * xi01 - G01["G11_1"] - 3 * G10["G12_1"]
                           + G01["G12_2"] + G10["G22_2"]
                           - 2 * (g111 - g122) * (4 * g121 - g222) + 4 * g112 * g221)
    out = out - a2 * (2 * (g111 - g122) * xi01 - G10["G11_1"] + G10["G12_2"]
                      - g111**2 + g111 * g122 + 3 * g112 * g121 - g112 * g222)
    return out


def p2_formula(xi, xi01, a, a10, a01, a20, a11, a02, G, G10, G01, displayed: bool = False):
    """``P2(xi, alpha)``."""
    return p2_principal(xi, a, a20, a11, a02) + p2_lower(xi, xi01, a, a10, a01, G, G10, G01,
                                                          displayed)


@dataclass(frozen=True)
class PDEOperands:
    """Derivatives of ``xi``, ``alpha`` and the Christoffel symbols at a base point."""

    xi: float
    xi10: float
    xi01: float
    a: float
    a10: float
    a01: float
    a20: float
    a11: float
    a02: float
    G: Mapping[str, float]
    G10: Mapping[str, float]
    G01: Mapping[str, float]

    @classmethod
    def from_jets(cls, xi, alpha, gamma: Mapping[str, object]) -> "PDEOperands":
        """Read operands from jets (``xi`` order >= 1, ``alpha`` >= 2, Christoffel >= 1)."""
        if xi.order < 1 or alpha.order < 2 or min(j.order for j in gamma.values()) < 1:
            raise JetOrderError("operands need xi to order 1, alpha to order 2, Gamma to order 1")
        return cls(
            xi=xi.value, xi10=xi.partial(_X1), xi01=xi.partial(_X2),
            a=alpha.value, a10=alpha.partial(_X1), a01=alpha.partial(_X2),
            a20=alpha.partial((2, 0, 0, 0)), a11=alpha.partial((1, 1, 0, 0)),
            a02=alpha.partial((0, 2, 0, 0)),
            G={k: gamma[k].value for k in GAMMA_KEYS},
            G10={k: gamma[k].partial(_X1) for k in GAMMA_KEYS},
            G01={k: gamma[k].partial(_X2) for k in GAMMA_KEYS},
        )

    @classmethod
    def at(cls, surface: AffineSurface, spec: NilpotentSpec, p: Point4) -> "PDEOperands":
        return cls.from_jets(spec.xi.jet(p, 2), spec.alpha.jet(p, 2), surface.entry_jets(p, 1))


def p1_eval(ops: PDEOperands) -> float:
    return float(p1_formula(ops.xi, ops.xi10, ops.xi01, ops.G))


def p2_eval(ops: PDEOperands, displayed: bool = False) -> float:
    return float(p2_formula(ops.xi, ops.xi01, ops.a, ops.a10, ops.a01, ops.a20, ops.a11, ops.a02,
                            ops.G, ops.G10, ops.G01, displayed))


# Bach-flatness for the canonical endomorphism --------------------------------

@dataclass(frozen=True)
class Thm11Residual:
    gamma_11_2: float
    second: float

    def satisfied(self, tol: float = 1e-10) -> bool:
        return self.gamma_11_2 < tol and self.second < tol


def thm11_check(surface: AffineSurface, p: Point4) -> Thm11Residual:
    """Residuals of ``Gamma_11^2 = 0`` and
    ``(Gamma_11^1)^2 - Gamma_11^1 Gamma_12^2 + d_x1(Gamma_11^1 - Gamma_12^2) = 0``."""
    e = surface.entry_jets(Point4(*p), 1)
    g111, g122 = e["G11_1"], e["G12_2"]
    second = g111.value**2 - g111.value * g122.value + (g111 - g122).partial(_X1)
    return Thm11Residual(abs(e["G11_2"].value), abs(second))


# the Q identities -----------------------------------------------------------

@dataclass(frozen=True)
class QIdentityReport:
    point: Point4
    bach: np.ndarray
    p1: float
    p2: float
    q1: float
    q2: float
    q3: float
    q3_residual: float
    mixed_block: float
    fiber_block: float
    b22_residual: float | None

    def to_json(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else
                    list(map(float, v)) if isinstance(v, tuple) else v)
                for k, v in self.__dict__.items()}


class AlphaVanishes(ValueError):
    pass


def q_identities(surface: AffineSurface, spec: NilpotentSpec, p: Point4,
                 deformation: DeformationField | None = None, p1_solved: bool = False,
                 alpha_tol: float = 1e-8) -> QIdentityReport:
    """Compare the Bach tensor of ``g_{T,nabla,Phi}`` with ``P1``, ``P2``.

    Always reports ``|Q3 + 4 alpha^2 P1^2|`` and the size of the blocks of ``B``
    that involve fiber directions; with ``p1_solved`` also ``|B_22 + 4 P2|``.
    """
    p = Point4(*p)
    ops = PDEOperands.at(surface, spec, p)
    if abs(ops.a) < alpha_tol:
        raise AlphaVanishes(f"alpha = {ops.a:.3g} at {tuple(p)}")
    metric = build_metric(surface, spec, deformation)
    b = curvature_pack(metric, p).bach
    xi = ops.xi
    q1 = b[0, 0] - b[0, 1] * xi
    q2 = b[0, 0] - b[1, 1] * xi**2
    q3 = 2 * q1 - q2
    P1, P2 = p1_eval(ops), p2_eval(ops)
    return QIdentityReport(
        point=p, bach=b, p1=P1, p2=P2, q1=float(q1), q2=float(q2), q3=float(q3),
        q3_residual=float(abs(q3 + 4 * ops.a**2 * P1**2)),
        mixed_block=float(np.max(np.abs(b[:2, 2:]))),
        fiber_block=float(np.max(np.abs(b[2:, 2:]))),
        b22_residual=float(abs(b[1, 1] + 4 * P2)) if p1_solved else None,
    )


def max_bach(metric: ExtensionMetric, points) -> float:
    return max(float(np.max(np.abs(curvature_pack(metric, q).bach))) for q in points)
