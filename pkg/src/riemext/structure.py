"""Fiber-polynomial structure of the curvature: Θ coefficients and structural zeros."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import bach_jet, curvature_pack
from .expr import Point4, is_constant
from .extension import EndoField, ExtensionMetric, NilpotentSpec, build_metric
from .surface import AffineSurface, flat_surface


class NonConstantEndomorphism(ValueError):
    pass


class NonCanonicalEndomorphism(ValueError):
    pass


@dataclass(frozen=True)
class ThetaTensor:
    """``theta[i, j, k, l]``: coefficient of ``y_i y_j`` in ``B_kl`` (0-based).

    The off-diagonal ``y1 y2`` coefficient is split evenly between ``(0, 1)``
    and ``(1, 0)`` so the tensor is symmetric in its first pair.
    """

    theta: np.ndarray

    def __getitem__(self, idx) -> float:
        return float(self.theta[idx])

    def component(self, ijkl: str) -> float:
        """Component by its 1-based label, e.g. ``"1122"``."""
        return float(self.theta[tuple(int(c) - 1 for c in ijkl)])


def _endo_fields(endo: EndoField):
    if isinstance(endo, NilpotentSpec):
        return (endo.alpha, endo.xi)
    if hasattr(endo, "t"):
        return [f for row in endo.t for f in row]
    return None


def theta_extract(metric: ExtensionMetric | EndoField, base: Point4 = Point4(0.0, 0.0),
                  surface: AffineSurface | None = None) -> ThetaTensor:
    """Quadratic fiber coefficients of the horizontal Bach block at ``y = 0``.

    Accepts a metric or a bare constant endomorphism (then placed over
    ``surface``, flat by default). Non-constant endomorphisms are rejected.
    """
    if isinstance(metric, ExtensionMetric):
        endo = metric.endo
    else:
        endo = metric
        metric = build_metric(surface if surface is not None else flat_surface(), endo)
    fields = _endo_fields(endo)
    if fields is None or not all(is_constant(f) for f in fields):
        raise NonConstantEndomorphism("Θ extraction needs a constant endomorphism")
    base = Point4(base[0], base[1], 0.0, 0.0)
    b = bach_jet(metric, base, 6)
    out = np.zeros((2, 2, 4, 4))
    out[0, 0] = b.coefficient((0, 0, 2, 0))
    out[1, 1] = b.coefficient((0, 0, 0, 2))
    out[0, 1] = out[1, 0] = 0.5 * np.asarray(b.coefficient((0, 0, 1, 1)))
    return ThetaTensor(out[:, :, :2, :2].copy())


def theta_closed_forms(l1: float, l2: float, eps: float) -> dict[str, float]:
    """Eigenvalue polynomials for ``T = [[l1, eps], [0, l2]]``.

    ``"1122"`` is only meaningful when ``l1 == l2``.
    """
    d2 = (l1 - l2) ** 2
    return {
        "1111": l1**2 * d2 * (l1**2 + l1 * l2 - 5 * l2**2) / 6.0,
        "2222": l2**2 * d2 * (-5 * l1**2 + l1 * l2 + l2**2) / 6.0,
        "1122": -3.0 * eps**2 * l1**4,
    }


# structural zeros ----------------------------------------------------------

#: Possibly non-zero entries for the canonical endomorphism (1-based labels).
INVERSE_METRIC_SUPPORT = ("13", "24", "33", "34", "44")
CHRISTOFFEL_SUPPORT = ("11_1", "11_2", "11_3", "11_4", "12_1", "12_2", "12_3", "12_4",
                       "13_3", "13_4", "14_3", "14_4", "22_1", "22_2", "22_3", "22_4",
                       "23_3", "23_4", "24_3", "24_4")
RIEMANN_SUPPORT = ("1212", "1213", "1214", "1223", "1224", "2323")


def _labels(s: str) -> tuple[int, ...]:
    return tuple(int(c) - 1 for c in s if c.isdigit())


def _riemann_orbit(ijkl) -> set[tuple[int, ...]]:
    i, j, k, l = ijkl
    base = {(i, j, k, l), (k, l, i, j)}
    out = set()
    for a, b, c, d in base:
        out |= {(a, b, c, d), (b, a, c, d), (a, b, d, c), (b, a, d, c)}
    return out


def support_masks() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ginv = np.zeros((4, 4), bool)
    for lab in INVERSE_METRIC_SUPPORT:
        a, b = _labels(lab)
        ginv[a, b] = ginv[b, a] = True
    gam = np.zeros((4, 4, 4), bool)
    for lab in CHRISTOFFEL_SUPPORT:
        i, j, k = _labels(lab)
        gam[i, j, k] = gam[j, i, k] = True
    riem = np.zeros((4,) * 4, bool)
    for lab in RIEMANN_SUPPORT:
        for idx in _riemann_orbit(_labels(lab)):
            riem[idx] = True
    return ginv, gam, riem


@dataclass(frozen=True)
class StructuralZerosReport:
    point: Point4
    max_inverse_metric: float
    max_christoffel: float
    max_riemann: float
    r2323: float
    offenders: tuple[str, ...]

    def passed(self, tol: float = 1e-10) -> bool:
        return max(self.max_inverse_metric, self.max_christoffel, self.max_riemann) < tol \
            and abs(self.r2323 + 1.0) < tol


def _is_canonical(endo) -> bool:
    if not hasattr(endo, "t") or isinstance(endo, NilpotentSpec):
        return False
    want = ((0.0, 1.0), (0.0, 0.0))
    for r in range(2):
        for i in range(2):
            f = endo.t[r][i]
            if not is_constant(f) or f.jet(Point4(0.0, 0.0), 0).value != want[r][i]:
                return False
    return True


def structural_zeros(metric: ExtensionMetric, p: Point4, tol: float = 1e-10) -> StructuralZerosReport:
    """Largest entries of ``g^ij``, Christoffel symbols and ``R`` outside the canonical support."""
    if not _is_canonical(metric.endo):
        raise NonCanonicalEndomorphism("structural zeros are stated for T = d_x1 (x) dx2")
    pack = curvature_pack(metric, p, 2, upto="riemann")
    mg, mc, mr = support_masks()
    offenders = []
    parts = []
    for name, arr, mask in (("ginv", pack.ginv, mg), ("Gamma", pack.gamma, mc),
                            ("R", pack.riemann, mr)):
        off = np.where(mask, 0.0, np.abs(arr))
        parts.append(float(off.max()))
        for idx in zip(*np.nonzero(off > tol)):
            offenders.append(name + "_" + "".join(str(i + 1) for i in idx))
    return StructuralZerosReport(Point4(*p), *parts, float(pack.riemann[1, 2, 1, 2]), tuple(offenders))
