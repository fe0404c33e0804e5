"""Self-dual / anti-self-dual splitting of the Weyl tensor of an extension metric.

The orthonormal frame is built from the horizontal metric entries:

    e1 = d_x1 + (1 - g11)/2 d_y1
    e2 = d_x2 - g12 d_y1 + (1 - g22)/2 d_y2
    e3 = d_x1 - (1 + g11)/2 d_y1
    e4 = d_x2 - g12 d_y1 - (1 + g22)/2 d_y2

with ``g(e_a, e_b) = diag(1, 1, -1, -1)``. Two-forms ``e^ab`` are paired with
the Weyl curvature operator after raising their frame indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from .curvature import curvature_pack
from .expr import Point4
from .jets import Jet

ETA = np.diag([1.0, 1.0, -1.0, -1.0])
_S = 1.0 / np.sqrt(2.0)


def _two_form(terms) -> np.ndarray:
    out = np.zeros((4, 4))
    for (a, b), c in terms:
        out[a, b] += c * _S
        out[b, a] -= c * _S
    return out


def sd_bases() -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """``(E+, E-)``: frame components of ``E_i^+-``, each antisymmetric 4x4."""
    plus = (_two_form([((0, 1), 1), ((2, 3), 1)]),
            _two_form([((0, 2), 1), ((1, 3), 1)]),
            _two_form([((0, 3), 1), ((1, 2), -1)]))
    minus = (_two_form([((0, 1), 1), ((2, 3), -1)]),
             _two_form([((0, 2), 1), ((1, 3), -1)]),
             _two_form([((0, 3), 1), ((1, 2), 1)]))
    return plus, minus


def two_form_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Induced inner product ``1/2 a_ab b^ab`` in the orthonormal frame."""
    return 0.5 * float(np.einsum("ab,ab", a, ETA @ b @ ETA))


def hodge_star(a: np.ndarray) -> np.ndarray:
    """Hodge dual in the frame for the volume form ``e^1234``."""
    up = ETA @ a @ ETA
    eps = np.zeros((4, 4, 4, 4))
    for perm, sign in _permutations():
        eps[perm] = sign
    return 0.5 * np.einsum("cd,abcd->ab", up, eps)


def _permutations():
    import itertools

    for perm in itertools.permutations(range(4)):
        inv = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
        yield perm, (-1.0) ** inv


def frame_jet(g: Jet) -> Jet:
    """Rows are the coordinate components of ``e1..e4``."""
    k = g.order
    one = Jet.constant(1.0, k)
    zero = Jet.constant(0.0, k)
    g11, g12, g22 = g[0, 0], g[0, 1], g[1, 1]
    rows = [
        [one, zero, (one - g11) * 0.5, zero],
        [zero, one, -g12, (one - g22) * 0.5],
        [one, zero, -(one + g11) * 0.5, zero],
        [zero, one, -g12, -(one + g22) * 0.5],
    ]
    return Jet.stack([Jet.stack(r) for r in rows])


@dataclass
class FrameSD:
    """Frame, two-form bases and the two halves of the Weyl tensor at a point.

    ``wplus[i, j] = W+(E_i^+, E_j^+)`` and likewise for ``wminus``; the
    ``*_jet`` entries keep the Taylor data for derivatives along the fiber.
    """

    point: Point4
    frame: np.ndarray
    eplus: tuple[np.ndarray, ...]
    eminus: tuple[np.ndarray, ...]
    wplus: np.ndarray
    wminus: np.ndarray
    mixed: np.ndarray
    wplus_jet: Jet = field(repr=False)
    wminus_jet: Jet = field(repr=False)

    def frame_gram(self, g: np.ndarray) -> np.ndarray:
        return self.frame @ g @ self.frame.T

    def wplus_partial(self, i: int, j: int, mu) -> float:
        return float(self.wplus_jet[i, j].partial(mu))

    def wminus_partial(self, i: int, j: int, mu) -> float:
        return float(self.wminus_jet[i, j].partial(mu))


def frame_sd(metric, p: Point4, order: int = 4) -> FrameSD:
    """Evaluate the SD/ASD decomposition of the Weyl tensor at ``p``.

    ``order`` is the metric jet order; the returned jets have order ``order - 2``.
    """
    p = Point4(*p)
    pack = curvature_pack(metric, p, order, upto="weyl")
    w = pack.jets["weyl"]
    k = w.order
    e = frame_jet(pack.jets["g"].truncate(k))
    # Weyl curvature operator pairing: minus the stored lowering
    wf = -w
    for slot in range(4):
        letters = "abcd"
        src = letters[:slot] + "x" + letters[slot + 1:]
        wf = jets.einsum(f"{letters[slot]}x,{src}->abcd", e, wf)
    plus, minus = sd_bases()

    def block(left, right) -> Jet:
        ups_l = np.stack([ETA @ a @ ETA for a in left])
        ups_r = np.stack([ETA @ b @ ETA for b in right])
        half = jets.contract("abcd,icd->abi", wf, ups_r)
        return jets.contract("abj,iab->ij", half, ups_l) * 0.25

    wp, wm, wx = block(plus, plus), block(minus, minus), block(plus, minus)
    return FrameSD(p, e.value, plus, minus, wp.value, wm.value, wx.value, wp, wm)
