"""Numerical normalizing coordinates for a nilpotent endomorphism field.

Given ``T`` with ``T^2 = 0`` and ``T(p0) != 0`` the construction runs in three
stages on a rectangle of parameters ``(z1, z2)`` anchored at ``p0``:

1. ``Z2`` is the coordinate vector with the largest image under ``T(p0)`` and
   ``Z1 = T Z2``. The map ``(z1, z2) -> flow of Z1 for time z1 from p0 + z2 Z2``
   makes ``Z1 = d_z1``; its ``z2`` derivative follows from the variational
   equation, the second derivative from the second variation.
2. ``f`` is defined by ``T d_z2 = f d_z1``. The correction ``g`` solves
   ``d_z1 g = (g d_z1 f + d_z2 f) / f`` with ``g(0, z2) = 0`` so that
   ``X1 = f d_z1`` and ``X2 = g d_z1 + d_z2`` commute.
3. The coordinates with ``d_n1 = X1`` and ``d_n2 = X2`` are ``n2 = z2`` and
   ``n1 = int_0^z1 dt / f``.

All integrals use RK4 in ``z1``. The quality check differentiates the sampled
map itself (fourth-order differences on the grid) and pushes ``T`` forward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import Point4
from .extension import EndoField


class NormalizationError(ValueError):
    pass


@dataclass
class NormalizationResult:
    """Sampled coordinate change on the ``(z1, z2)`` grid.

    ``orig[..., :]`` are the original coordinates of each node, ``new[..., :]``
    the normalizing ones, ``f`` and ``g`` the intermediate functions.
    """

    z1: np.ndarray
    z2: np.ndarray
    orig: np.ndarray
    new: np.ndarray
    f: np.ndarray
    g: np.ndarray
    pushforward_residual: float
    nilpotency_residual: float
    commutator_residual: float
    interior: tuple = field(default=(slice(2, -2), slice(2, -2)), repr=False)

    def passed(self, tol: float = 1e-6) -> bool:
        return self.pushforward_residual < tol

    def report(self) -> dict:
        return {
            "nodes": [int(self.z1.size), int(self.z2.size)],
            "pushforward_residual": self.pushforward_residual,
            "nilpotency_residual": self.nilpotency_residual,
            "commutator_residual": self.commutator_residual,
            "f_range": [float(self.f.min()), float(self.f.max())],
        }


def _endo_data(endo: EndoField, x1: np.ndarray, x2: np.ndarray):
    """``T``, ``dT`` and ``d2T`` at base points; derivative indices come last."""
    jet = endo.jet(Point4(x1, x2), 2)
    t = np.moveaxis(np.asarray(jet.value), -1, 0)
    e = ((1, 0, 0, 0), (0, 1, 0, 0))
    dt = np.stack([np.moveaxis(np.asarray(jet.partial(e[a])), -1, 0) for a in range(2)], -1)
    d2 = np.empty(t.shape + (2, 2))
    for a in range(2):
        for b in range(2):
            mu = tuple(x + y for x, y in zip(e[a], e[b]))
            d2[..., a, b] = np.moveaxis(np.asarray(jet.partial(mu)), -1, 0)
    return t, dt, d2


def _rhs(endo, col: int):
    """State: pos(2), V(2), W(2), g, n1 for a batch of lines."""

    def rhs(state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pos, v, w, g = state[:, 0:2], state[:, 2:4], state[:, 4:6], state[:, 6]
        t, dt, d2 = _endo_data(endo, pos[:, 0], pos[:, 1])
        z1 = t[:, :, col]
        dz1 = dt[:, :, col, :]
        d2z1 = d2[:, :, col, :, :]
        dpos = z1
        dv = np.einsum("nia,na->ni", dz1, v)
        dw = np.einsum("niab,na,nb->ni", d2z1, v, v) + np.einsum("nia,na->ni", dz1, w)
        f, f1, f2 = _f_and_derivatives(t, dt, z1, dz1, dv, v, w)
        dg = (g * f1 + f2) / f
        dn1 = 1.0 / f
        out = np.concatenate([dpos, dv, dw, dg[:, None], dn1[:, None]], axis=1)
        return out, f

    return rhs


def _f_and_derivatives(t, dt, z1, dz1, dv, v, w):
    """``f = <Z1, T V> / |Z1|^2`` and its ``z1``, ``z2`` derivatives.

    Along ``z1`` the position moves by ``Z1`` and ``V`` by ``dv``; along ``z2``
    the position moves by ``V`` and ``V`` by ``W``.
    """
    tv = np.einsum("nij,nj->ni", t, v)
    nz = np.einsum("ni,ni->n", z1, z1)
    f = np.einsum("ni,ni->n", z1, tv) / nz

    def deriv(dpos, dvel):
        dtm = np.einsum("nija,na->nij", dt, dpos)
        dz = np.einsum("nia,na->ni", dz1, dpos)
        dtv = np.einsum("nij,nj->ni", dtm, v) + np.einsum("nij,nj->ni", t, dvel)
        num = np.einsum("ni,ni->n", dz, tv) + np.einsum("ni,ni->n", z1, dtv)
        dnz = 2 * np.einsum("ni,ni->n", z1, dz)
        return num / nz - f * dnz / nz

    return f, deriv(z1, dv), deriv(v, w)


def _d4(arr: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order central difference; edge nodes are left as NaN."""
    a = np.moveaxis(arr, axis, 0)
    out = np.full(a.shape, np.nan)
    out[2:-2] = (a[:-4] - 8 * a[1:-3] + 8 * a[3:-1] - a[4:]) / (12 * h)
    return np.moveaxis(out, 0, axis)


def normalize_nilpotent(endo: EndoField, p0=(0.0, 0.0), size=(0.5, 0.5), step: float = 1 / 64,
                        substeps: int = 1, nil_tol: float = 1e-8) -> NormalizationResult:
    """Sample normalizing coordinates for ``endo`` on a ``size`` rectangle at ``p0``."""
    p0 = np.asarray(p0[:2], dtype=float)
    t0 = np.asarray(endo.jet(Point4(*p0), 0).value, dtype=float)
    col = int(np.argmax(np.linalg.norm(t0, axis=0)))
    if np.linalg.norm(t0[:, col]) < 1e-12:
        raise NormalizationError("T vanishes at the base point")
    n1 = int(round(size[0] / step)) + 1
    n2 = int(round(size[1] / step)) + 1
    z1 = np.linspace(0.0, size[0], n1)
    z2 = np.linspace(0.0, size[1], n2)
    start = np.zeros((n2, 8))
    start[:, 0:2] = p0 + np.outer(z2, np.eye(2)[col])
    start[:, 2:4] = np.eye(2)[col]
    rhs = _rhs(endo, col)
    states = np.empty((n1, n2, 8))
    fvals = np.empty((n1, n2))
    states[0] = start
    h = (z1[1] - z1[0]) / substeps if n1 > 1 else 0.0
    y = start
    for i in range(n1):
        k1, f = rhs(y)
        if not np.all(np.isfinite(f)) or np.min(np.abs(f)) < 1e-10:
            raise NormalizationError(f"f vanishes near z1 = {z1[i]:.4g}")
        fvals[i] = f
        states[i] = y
        if i == n1 - 1:
            break
        for s in range(substeps):
            if s:
                k1, _ = rhs(y)
            k2, _ = rhs(y + 0.5 * h * k1)
            k3, _ = rhs(y + 0.5 * h * k2)
            k4, _ = rhs(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    orig = states[..., 0:2]
    new = np.stack([states[..., 7], np.broadcast_to(z2, (n1, n2))], -1)
    g = states[..., 6]

    t_all, _, _ = _endo_data(endo, orig[..., 0].ravel(), orig[..., 1].ravel())
    t_all = t_all.reshape(n1, n2, 2, 2)
    nil = float(np.max(np.abs(np.einsum("...ij,...jk->...ik", t_all, t_all))))
    if nil > nil_tol:
        raise NormalizationError(f"T is not nilpotent on the rectangle (|T^2| = {nil:.3g})")

    hz1 = z1[1] - z1[0]
    hz2 = z2[1] - z2[0]
    # Jacobians of the sampled maps with respect to (z1, z2)
    j_oz = np.stack([_d4(orig, hz1, 0), _d4(orig, hz2, 1)], -1)
    j_nz = np.stack([_d4(new, hz1, 0), _d4(new, hz2, 1)], -1)
    inner = (slice(2, -2), slice(2, -2))
    j_on = np.einsum("...ia,...aj->...ij", j_oz[inner], np.linalg.inv(j_nz[inner]))
    pushed = np.linalg.solve(j_on, t_all[inner] @ j_on)
    target = np.array([[0.0, 1.0], [0.0, 0.0]])
    push_res = float(np.max(np.abs(pushed - target)))

    # [X1, X2] in z coordinates, from the sampled f and g
    fz1, fz2, gz1 = _d4(fvals, hz1, 0), _d4(fvals, hz2, 1), _d4(g, hz1, 0)
    comm = (fvals * gz1 - g * fz1 - fz2)[inner]
    return NormalizationResult(z1, z2, orig, new, fvals, g, push_res, nil,
                               float(np.max(np.abs(comm))), inner)
