"""Scalar curvature invariants, the VSI classifier and the Walker invariants beta1, beta2."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .curvature import CurvaturePack, covariant_derivative, curvature_pack
from .expr import Point4
from .extension import ExtensionMetric, classify_matrix, JordanType

#: Index permutation exchanging (x1, y1) with (x2, y2).
MIRROR = (1, 0, 3, 2)


# quadratic invariants -------------------------------------------------------

@dataclass(frozen=True)
class QuadraticInvariants:
    tau: float
    norm_rho2: float
    norm_r2: float

    def kappa(self, a: float, b: float, c: float) -> float:
        """``a tau^2 + b |R|^2 + c |rho|^2``."""
        return a * self.tau**2 + b * self.norm_r2 + c * self.norm_rho2

    @property
    def classifier_a(self) -> float:
        """``4 |rho|^2 - 3 tau^2``."""
        return self.kappa(-3.0, 0.0, 4.0)

    @property
    def classifier_b(self) -> float:
        """``|R|^2 - 88/5 |rho|^2 + 56/5 tau^2``."""
        return self.kappa(56.0 / 5.0, 1.0, -88.0 / 5.0)


def _full_contraction(a: np.ndarray, b: np.ndarray, ginv: np.ndarray) -> float:
    """``a^{i1..in} b_{i1..in}`` with every index of ``a`` raised."""
    up = a
    for axis in range(a.ndim):
        up = np.moveaxis(np.tensordot(ginv, up, axes=([1], [axis])), 0, axis)
    return float(np.sum(up * b))


def quadratic_invariants(pack: CurvaturePack) -> QuadraticInvariants:
    g = pack.ginv
    return QuadraticInvariants(
        tau=float(pack.scalar),
        norm_rho2=_full_contraction(pack.ricci, pack.ricci, g),
        norm_r2=_full_contraction(pack.riemann, pack.riemann, g),
    )


def eigenvalue_closed_forms(l1: complex, l2: complex) -> QuadraticInvariants:
    """Eigenvalue formulas for constant ``T`` (conjugate pairs give real values)."""
    tau = 2 * (l1**2 + l1 * l2 + l2**2)
    r2 = 4 * (l1**4 + l1**2 * l2**2 + l2**4)
    rho2 = 2 * l1**4 + 2 * l1**3 * l2 + l1**2 * l2**2 + 2 * l1 * l2**3 + 2 * l2**4
    return QuadraticInvariants(float(np.real(tau)), float(np.real(rho2)), float(np.real(r2)))


def rotation_closed_forms(r: float, theta: float) -> QuadraticInvariants:
    """Values for ``T = r [[cos t, sin t], [-sin t, cos t]]``."""
    c2, c4 = np.cos(2 * theta), np.cos(4 * theta)
    return QuadraticInvariants(2 * r**2 * (2 * c2 + 1), r**4 * (4 * c4 + 4 * c2 + 1),
                               4 * r**4 * (2 * c4 + 1))


# VSI classification ---------------------------------------------------------

class VSIVerdict(enum.Enum):
    NILPOTENT = "VSI-evidence"
    NOT_VSI = "NotVSI"


@dataclass(frozen=True)
class VSIReport:
    verdict: VSIVerdict
    classifier: float
    invariants: QuadraticInvariants
    witness: str | None
    jordan: JordanType | None = None

    @property
    def consistent(self) -> bool | None:
        """Agreement with the pointwise Jordan type, when one was supplied."""
        if self.jordan is None:
            return None
        nil = self.jordan in (JordanType.NILPOTENT_NONZERO, JordanType.ZERO)
        return nil == (self.verdict is VSIVerdict.NILPOTENT)


def vsi_classify(source, tol: float = 1e-9, endo_value: np.ndarray | None = None) -> VSIReport:
    """Decide nilpotency of ``T`` from ``4 |rho|^2 - 3 tau^2``.

    ``source`` is a :class:`CurvaturePack`, a :class:`QuadraticInvariants` or an
    eigenvalue pair. Passing ``endo_value`` adds the Jordan-type cross-check.
    """
    if isinstance(source, CurvaturePack):
        inv = quadratic_invariants(source)
    elif isinstance(source, QuadraticInvariants):
        inv = source
    else:
        inv = eigenvalue_closed_forms(*source)
    cls = inv.classifier_a
    scale = max(1.0, abs(inv.tau) ** 2, abs(inv.norm_rho2))
    if abs(cls) < tol * scale:
        verdict, witness = VSIVerdict.NILPOTENT, None
    else:
        verdict = VSIVerdict.NOT_VSI
        witness = next((name for name, v in (("tau", inv.tau), ("normRho2", inv.norm_rho2),
                                             ("normR2", inv.norm_r2))
                        if abs(v) >= tol), "4|rho|^2-3tau^2")
    jordan = classify_matrix(endo_value).kind if endo_value is not None else None
    return VSIReport(verdict, cls, inv, witness, jordan)


@dataclass(frozen=True)
class DerivativeInvariants:
    norm_nabla_r2: float
    norm_nabla_w2: float
    cubic: float


def derivative_level_invariants(metric, p: Point4, order: int = 4) -> DerivativeInvariants:
    """``|nabla R|^2``, ``|nabla W|^2`` and ``R_ij^kl R_kl^mn R_mn^ij`` at ``p``."""
    pack = curvature_pack(metric, p, order, upto="weyl")
    gam = pack.jets["gamma"]
    dr = covariant_derivative(pack.jets["riemann"], gam).value
    dw = covariant_derivative(pack.jets["weyl"], gam).value
    g = pack.ginv
    r = pack.riemann
    mixed = np.einsum("ka,lb,ijab->ijkl", g, g, r)  # R_ij^kl
    cubic = float(np.einsum("ijkl,klmn,mnij->", mixed, mixed, mixed))
    return DerivativeInvariants(_full_contraction(dr, dr, g), _full_contraction(dw, dw, g), cubic)


# Walker invariants -----------------------------------------------------------

@dataclass(frozen=True)
class Undefined:
    """Marker for a quantity whose defining precondition fails."""

    reason: str

    def __bool__(self):
        return False

    def __float__(self):
        raise ValueError(f"undefined: {self.reason}")


class DegenerateRhoH(ValueError):
    pass


class ZeroOmega(ValueError):
    pass


def _permute(arr: np.ndarray, perm=MIRROR) -> np.ndarray:
    idx = np.ix_(*([list(perm)] * arr.ndim))
    return arr[idx]


@dataclass
class WalkerInvariants:
    point: Point4
    rho_h: np.ndarray
    omega_h_form: float
    omega_h: np.ndarray | Undefined
    beta1: float | Undefined
    beta2: float | Undefined
    mirrored: bool = False
    extras: dict = field(default_factory=dict, repr=False)

    def require_beta1(self) -> float:
        if isinstance(self.beta1, Undefined):
            raise DegenerateRhoH(self.beta1.reason)
        return self.beta1

    def require_beta2(self) -> float:
        if isinstance(self.beta2, Undefined):
            raise (ZeroOmega if "Omega" in self.beta2.reason else DegenerateRhoH)(self.beta2.reason)
        return self.beta2


def horizontal_operator_trace(pack: CurvaturePack, with_derivative: bool = True):
    """``sum_a R(d_i, d_j)`` traced over ``a in {1, 2}``, and its covariant derivative.

    Returns ``(omega[i, j], nabla_omega[i, j, n])`` for all four indices.
    """
    op = pack.riemann_op
    tr = op[:, :, 0, 0] + op[:, :, 1, 1]
    if not with_derivative:
        return tr, None
    d = pack.nabla("riemann").value  # R_ijkl;n with R_ijkl = g(R(d_i,d_j)d_l, d_k)
    op_d = np.einsum("bk,ijkln->ijlbn", pack.ginv, d)
    return tr, op_d[:, :, 0, 0, :] + op_d[:, :, 1, 1, :]


def walker_invariants(metric: ExtensionMetric, p: Point4, mirrored: bool = False,
                      order: int = 4, tol: float = 1e-12) -> WalkerInvariants:
    """``rho^h``, ``Omega^h(d1, d2)``, ``omega^h`` and ``beta1``, ``beta2`` at ``p``.

    ``mirrored`` handles ``T = d_x2 (x) dx1`` by exchanging the roles of
    ``(x1, y1)`` and ``(x2, y2)`` before applying the canonical formulas.
    """
    p = Point4(*p)
    pack = curvature_pack(metric, p, order, upto="riemann")
    tr, dtr = horizontal_operator_trace(pack)
    rho = pack.ricci
    if mirrored:
        tr, dtr, rho = _permute(tr), _permute(dtr), _permute(rho)
    rho_h = rho[:2, :2].copy()
    big = tr[0, 1]
    det = rho_h[0, 0] * rho_h[1, 1] - rho_h[0, 1] ** 2
    scale = max(1.0, float(np.max(np.abs(rho_h))) ** 2)
    extras = {"det_rho_h": det, "nabla_trace": dtr[0, 1, :2].copy()}
    if abs(det) < tol * scale:
        reason = "rho^h is degenerate"
        return WalkerInvariants(p, rho_h, big, Undefined(reason), Undefined(reason),
                                Undefined(reason), mirrored, extras)
    beta1 = big**2 / det
    if abs(big) < tol:
        reason = "Omega^h vanishes"
        return WalkerInvariants(p, rho_h, big, Undefined(reason), beta1, Undefined(reason),
                                mirrored, extras)
    om = dtr[0, 1, :2] / big
    beta2 = (rho_h[1, 1] * om[0] ** 2 + rho_h[0, 0] * om[1] ** 2
             - 2 * rho_h[0, 1] * om[0] * om[1]) / det
    return WalkerInvariants(p, rho_h, big, om, beta1, beta2, mirrored, extras)


def d_omega_fd(metric: ExtensionMetric, p: Point4, h: float, mirrored: bool = False) -> float:
    """Central-difference ``d omega^h (d1, d2) = d1 omega_2 - d2 omega_1``."""
    p = Point4(*p)

    def om(dx1, dx2):
        w = walker_invariants(metric, Point4(p.x1 + dx1, p.x2 + dx2, p.y1, p.y2), mirrored)
        if isinstance(w.omega_h, Undefined):
            raise ZeroOmega(w.omega_h.reason)
        return w.omega_h

    d1 = (om(h, 0)[1] - om(-h, 0)[1]) / (2 * h)
    d2 = (om(0, h)[0] - om(0, -h)[0]) / (2 * h)
    return float(d1 - d2)


# the block structure of the curvature ----------------------------------------

def walker_block_report(metric: ExtensionMetric, p: Point4) -> dict[str, float]:
    """Residuals of the block identities for ``T = d_x1 (x) dx2`` (max-norms)."""
    p = Point4(*p)
    surface = metric.surface
    pack = curvature_pack(metric, p, 4, upto="riemann")
    op = pack.riemann_op  # op[a, b, i, j] = R_abi^j
    e = {k: v.value for k, v in surface.entry_jets(p, 0).items()}
    aff = surface.curvature_at(p, 0).value
    ric = surface.ricci_affine(p)
    x3, x4 = p.y1, p.y2
    phi11 = metric.deformation.jet(p, 0).value[0, 0]
    out = {}
    out["vertical_to_horizontal"] = float(np.abs(op[:, :, 2:, :2]).max())
    out["trace_pairs"] = float(max(np.abs(op[:, :, 0, 0] + op[:, :, 2, 2]).max(),
                                   np.abs(op[:, :, 1, 1] + op[:, :, 3, 3]).max(),
                                   np.abs(op[:, :, 0, 1] + op[:, :, 3, 2]).max(),
                                   np.abs(op[:, :, 1, 0] + op[:, :, 2, 3]).max()))
    allowed = {(0, 1), (1, 2)}
    # the horizontal block (and with it the vertical one) only lives on these pairs
    out["horizontal_pairs"] = float(max(
        np.abs(op[i, j, :2, :2]).max() for i in range(4) for j in range(i + 1, 4)
        if (i, j) not in allowed))
    out["block_23"] = float(np.abs(op[1, 2, :2, :2].T - np.array([[0.0, 1.0], [0.0, 0.0]])).max())
    corr = np.array([[-e["G11_2"], e["G11_1"] - e["G12_2"]], [0.0, e["G11_2"]]])
    out["block_12"] = float(np.abs(op[0, 1, :2, :2].T - (aff[0, 1].T - x3 * corr)).max())
    out["trace_12"] = float(abs(op[0, 1, 0, 0] + op[0, 1, 1, 1] + 2 * ric.antisymmetric[0, 1]))
    rho = pack.ricci
    out["ricci_vertical"] = float(np.abs(rho[2:, :]).max())
    pred = 2 * ric.symmetric + np.array([
        [0.0, 2 * x3 * e["G11_2"]],
        [2 * x3 * e["G11_2"], -4 * x3 * e["G11_1"] - 2 * x4 * e["G11_2"] + 2 * x3 * e["G12_2"] + phi11]])
    out["ricci_block"] = float(np.abs(rho[:2, :2] - pred).max())
    _, dtr = horizontal_operator_trace(pack)
    mask = np.ones((4, 4, 4), bool)
    mask[:2, :2, :2] = False
    out["nabla_trace"] = float(np.abs(np.where(mask, dtr, 0.0)).max())
    return out


def walker_blocks_passed(report: dict[str, float], tol: float = 1e-10) -> bool:
    return all(v < tol for v in report.values())


# closed forms of the Walker invariants on Type B surfaces ----------------------

def beta_closed_forms(case: str, C: dict, x1: float, x3: float = 0.0, x4: float = 0.0,
                      phi11: float = 0.0, phi22: float = 0.0) -> tuple[float, float]:
    """``(beta1, beta2)`` for the four Type B cases ("1", "2", "mirrored1", "mirrored2")."""
    c111, c112 = C.get("G11_1", 0.0), C.get("G11_2", 0.0)
    c121, c122 = C.get("G12_1", 0.0), C.get("G12_2", 0.0)
    c221, c222 = C.get("G22_1", 0.0), C.get("G22_2", 0.0)
    if case == "1":
        s = c122
        delta = (2 * (2 - s) * s * x1**2 * phi11 - 4 * (2 - s) ** 2 * s * x1 * x3
                 - (4 * s + 1) * c121**2 + 4 * (s - 2) * c221 * s**2
                 - c222**2 + 2 * (1 - 2 * (s - 1) * s) * c121 * c222)
        b1 = (c121 + c222) ** 2 / delta
        b2 = ((s + 3) ** 2 * x1**2 * phi11 + 2 * (s - 2) * (s + 3) ** 2 * x1 * x3
              - 2 * (s + 3) ** 2 * s * c221 - 2 * ((s - 1) * s + 3) * c222**2
              - 2 * ((4 * s + 9) * s + 6) * c121**2
              - 2 * ((3 * s - 4) * s - 9) * c121 * c222) / delta
        return b1, b2
    if case == "2":
        a = c111
        delta = (2 * a * x1**2 * phi11 - 4 * a**2 * x1 * x3 - c222**2
                 - (4 * a**2 + 1) * c121**2 - 4 * a * c221 + 2 * c121 * c222)
        b1 = (c121 + c222) ** 2 / delta
        b2 = (4 * (a + 1) ** 2 * x1**2 * phi11 - 8 * (a + 1) ** 2 * a * x1 * x3
              - 2 * (a + 2) * c222**2 - 8 * (a + 1) ** 2 * c221
              - 2 * (a * (8 * a + 9) + 2) * c121**2 + 4 * (3 * a + 2) * c121 * c222) / delta
        return b1, b2
    if case == "mirrored1":
        delta = c121**2 * (-2 * x1**2 * phi22 - 4 * c121 * x1 * x4
                           - 4 * c111 * c122 + 4 * c112 * c121 - 1)
        b1 = c121**2 / delta
        b2 = c121**2 * (x1**2 * phi22 + 2 * c121 * x1 * x4 - 12 * c122 - 2 * c112 * c121 - 4
                        - 2 * c111**2 - 8 * c122**2 - 6 * (c122 + 1) * c111) / delta
        return b1, b2
    if case == "mirrored2":
        b1 = -1.0 / c122**2
        b2 = -(x1**2 * phi22 - 2 * c121 * x1 * x4 - 4 * c122**2 - 2 * c122) / c122**2
        return b1, b2
    raise ValueError(f"unknown case {case!r}")
