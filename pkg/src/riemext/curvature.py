"""Pointwise curvature of a 4-dimensional metric given by jets.

Index conventions (0-based, coordinates ``(x1, x2, y1, y2)``):

* ``gamma[i, j, k] = Gamma_ij^k`` of the Levi-Civita connection;
* ``R(d_i, d_j) d_k = riemann_op[i, j, k, l] d_l`` with
  ``R(X, Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X, Y]``;
* ``riemann[i, j, k, l] = g(R(d_i, d_j) d_l, d_k)``, so that a sphere has
  ``R_1212 = +g11 g22`` and the canonical extension has ``R_2323 = -1``;
* ``ricci[j, k] = trace(X -> R(X, d_j) d_k)``, ``scalar = g^{jk} ricci[j, k]``;
* covariant derivatives append the derivative index last;
* ``bach[i, j] = BACH_SIGN (g^{ka} g^{lb} W[k, i, j, l; b; a] + 1/2 rho^{kl} W[k, i, j, l])``.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .expr import Point4
from .jets import Jet, JetOrderError
from .surface import riemann_operator

RICCI_SIGN = 1.0
#: Overall sign of the Bach tensor relative to ``nabla^k nabla^l W_kijl + 1/2 rho^kl W_kijl``
#: with the lowering above; -1 equals contracting ``W_kilj`` instead and makes
#: ``B_22 = -4 P2`` hold for nilpotent structures (see ``bachflat``).
BACH_SIGN = -1.0

CONVENTIONS = {
    "coordinates": ["x1", "x2", "y1", "y2"],
    "curvature_operator": "R(X,Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y]",
    "riemann_lowered": "R_ijkl = g(R(d_i,d_j)d_l, d_k)",
    "ricci": "rho_jk = trace(X -> R(X,d_j)d_k)",
    "ricci_sign": RICCI_SIGN,
    "weyl": "W = R - (rho o g)/2 + tau/6 (g o g)/2 (Kulkarni-Nomizu)",
    "bach": "B_ij = bach_sign * (nabla^k nabla^l W_kijl + 1/2 rho^kl W_kijl)",
    "bach_sign": BACH_SIGN,
    "div4_weyl": "(div4 W)_ijk = g^lm W_ijkl;m",
}


def christoffel(g: Jet, ginv: Jet) -> Jet:
    """Levi-Civita symbols ``Gamma_ab^k`` from metric jets (one order lost)."""
    dg = g.grad()  # dg[a, b, c] = d_c g_ab
    low = 0.5 * (dg.transpose(2, 0, 1) + dg.transpose(0, 2, 1) - dg)
    return jets.einsum("abc,kc->abk", low, ginv)


def covariant_derivative(t: Jet, gamma: Jet, rank: int | None = None) -> Jet:
    """``nabla t`` for a covariant tensor ``t``; the new index is appended last."""
    rank = len(t.shape) if rank is None else rank
    if t.order < 1:
        raise JetOrderError("tensor jet has no order left to differentiate")
    out = t.grad()
    letters = string.ascii_lowercase[:rank]
    n, m = "y", "z"
    for s in range(rank):
        src = letters[:s] + m + letters[s + 1:]
        out = out - jets.einsum(f"{n}{letters[s]}{m},{src}->{letters}{n}", gamma, t)
    return out


def lower_riemann(r_op: Jet, g: Jet) -> Jet:
    """``g(R(d_i, d_j) d_l, d_k)``."""
    return jets.einsum("ijlm,mk->ijkl", r_op, g)


def weyl_tensor(riem: Jet, ricci: Jet, tau: Jet, g: Jet) -> Jet:
    """Trace-free part of the curvature in dimension four.

    ``riem`` is lowered so that ``g^{ik} R_ijkl = rho_jl``.
    """
    rg = jets.einsum("ik,jl->ijkl", ricci, g)
    # rho o g: rho_ik g_jl + rho_jl g_ik - rho_il g_jk - rho_jk g_il
    kn = rg + rg.transpose(1, 0, 3, 2) - rg.transpose(0, 1, 3, 2) - rg.transpose(1, 0, 2, 3)
    gg = jets.einsum("ik,jl->ijkl", g, g)
    gkn = gg - gg.transpose(0, 1, 3, 2)
    return riem - 0.5 * kn + jets.einsum(",ijkl->ijkl", tau * (1.0 / 6.0), gkn)


def raise_pair(t: Jet, ginv: Jet) -> Jet:
    """``t^{kl} = g^{ka} g^{lb} t_ab``."""
    return jets.einsum("ka,al->kl", ginv, jets.einsum("ab,lb->al", t, ginv))


@dataclass
class CurvaturePack:
    """Curvature hierarchy of a metric at one point.

    Array attributes hold values at the point; ``jets`` keeps the Taylor data
    each quantity was computed with so callers can differentiate further.
    """

    point: Point4
    order: int
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray
    riemann_op: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: np.ndarray | None = None
    div_weyl: np.ndarray | None = None
    bach: np.ndarray | None = None
    jets: dict = field(default_factory=dict, repr=False)
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))

    def nabla(self, name: str) -> Jet:
        """Covariant derivative of a stored tensor jet (cached)."""
        key = "nabla_" + name
        if key not in self.jets:
            self.jets[key] = covariant_derivative(self.jets[name], self.jets["gamma"])
        return self.jets[key]

    def to_json(self) -> dict:
        from .report import tensor_entries

        out = {
            "point": list(map(float, self.point)),
            "order": self.order,
            "conventions": self.conventions,
            "scalar": float(self.scalar),
        }
        for name, arr, prefix in (("riemann", self.riemann, "R_"), ("ricci", self.ricci, "rho_"),
                                  ("weyl", self.weyl, "W_"), ("bach", self.bach, "B_")):
            if arr is not None:
                out[name] = tensor_entries(arr, prefix)
        return out


_LEVELS = ("riemann", "weyl", "bach")


def curvature_pack(metric, p: Point4, order: int = 4, upto: str = "bach") -> CurvaturePack:
    """Evaluate the curvature hierarchy of ``metric`` at ``p``.

    ``metric`` is anything with ``jet(p, order)`` returning a 4x4 metric jet.
    ``upto`` limits the work to ``"riemann"``, ``"weyl"`` or ``"bach"``.
    """
    if upto not in _LEVELS:
        raise ValueError(f"upto must be one of {_LEVELS}")
    need = {"riemann": 2, "weyl": 2, "bach": 4}[upto]
    if order < need:
        raise JetOrderError(f"{upto} needs metric jets of order >= {need}, got {order}")
    p = Point4(*p)
    g = metric.jet(p, order)
    try:
        ginv = jets.matrix_inverse(g)
    except jets.SingularJetMatrix as exc:  # pragma: no cover - extension metrics have det 1
        raise RuntimeError(f"singular metric at {tuple(p)}") from exc
    gamma = christoffel(g, ginv)
    r_op = riemann_operator(gamma)
    riem = lower_riemann(r_op, g)
    ricci = Jet(RICCI_SIGN * sum(r_op.coeffs[i, :, :, i] for i in range(4)))
    tau = jets.einsum("jk,jk->", ginv, ricci)
    store = {"g": g, "ginv": ginv, "gamma": gamma, "riemann_op": r_op, "riemann": riem,
             "ricci": ricci, "scalar": tau}
    pack = CurvaturePack(p, order, g.value, ginv.value, gamma.value, riem.value, r_op.value,
                         ricci.value, float(tau.value), jets=store)
    if upto == "riemann":
        return pack
    w = weyl_tensor(riem, ricci, tau, g)
    store["weyl"] = w
    pack.weyl = w.value
    if upto == "weyl":
        return pack
    dw = covariant_derivative(w, gamma)
    ddw = covariant_derivative(dw, gamma)
    store["nabla_weyl"] = dw
    store["nabla_nabla_weyl"] = ddw
    div = jets.einsum("ijklm,lm->ijk", dw, ginv)
    store["div_weyl"] = div
    pack.div_weyl = div.value
    # g^{ka} g^{lb} W_kijl;b;a
    t = jets.einsum("kijlba,lb->kija", ddw, ginv)
    term1 = jets.einsum("kija,ka->ij", t, ginv)
    rho_up = raise_pair(ricci, ginv)
    term2 = jets.einsum("kl,kijl->ij", rho_up, w)
    bach = BACH_SIGN * (term1 + 0.5 * term2)
    store["bach"] = bach
    pack.bach = bach.value
    return pack


def bach_jet(metric, p: Point4, order: int = 6) -> Jet:
    """Bach tensor as a jet of order ``order - 4`` at ``p``."""
    return curvature_pack(metric, p, order).jets["bach"]
