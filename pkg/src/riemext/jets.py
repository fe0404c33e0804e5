"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` stores the Taylor coefficients of one or more smooth fields at
a point, ``f(p + h) = sum_mu c_mu h^mu`` over multi-indices ``|mu| <= K``.
Coefficients live on the last axis of a numpy array, so a Jet can carry a
whole tensor of fields (shape ``(4, 4, ncoef)`` for a metric, say).

Multi-indices are stored in graded order, so the order-``k`` truncation of a
jet is simply a prefix of its coefficient vector.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

NVARS = 4
MAX_ORDER = 6


def _multi_indices(nvars: int, max_order: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(max_order + 1):
        block = [
            mu
            for mu in itertools.product(range(deg + 1), repeat=nvars)
            if sum(mu) == deg
        ]
        # x1 powers first within a degree
        block.sort(reverse=True)
        out.extend(block)
    return out


MULTI_INDICES: list[tuple[int, ...]] = _multi_indices(NVARS, MAX_ORDER)
INDEX: dict[tuple[int, ...], int] = {mu: i for i, mu in enumerate(MULTI_INDICES)}
_NCOEF = [math.comb(k + NVARS, NVARS) for k in range(MAX_ORDER + 1)]
_ORDER_OF = {n: k for k, n in enumerate(_NCOEF)}
_FACT = np.array([math.prod(math.factorial(m) for m in mu) for mu in MULTI_INDICES], dtype=float)


def ncoef(order: int) -> int:
    return _NCOEF[order]


@lru_cache(maxsize=None)
def _product_table(order: int):
    """Pairs (a, b) with |a|+|b| <= order, grouped by the target index."""
    n = _NCOEF[order]
    ia, ib, ic = [], [], []
    for c in range(n):
        mc = MULTI_INDICES[c]
        for a in range(n):
            ma = MULTI_INDICES[a]
            if any(x > y for x, y in zip(ma, mc)):
                continue
            mb = tuple(y - x for x, y in zip(ma, mc))
            ia.append(a)
            ib.append(INDEX[mb])
            ic.append(c)
    ic = np.asarray(ic)
    starts = np.flatnonzero(np.r_[True, ic[1:] != ic[:-1]])
    return np.asarray(ia), np.asarray(ib), starts


@lru_cache(maxsize=None)
def _derivative_table(order: int, var: int):
    """Gather map and weights for d/dh_var, from an order-``order`` jet."""
    n = _NCOEF[order - 1]
    src = np.empty(n, dtype=int)
    w = np.empty(n)
    for i in range(n):
        mu = list(MULTI_INDICES[i])
        mu[var] += 1
        src[i] = INDEX[tuple(mu)]
        w[i] = mu[var]
    return src, w


class JetOrderError(ValueError):
    """Raised when a computation needs more Taylor orders than are available."""


class Jet:
    """Array of truncated Taylor expansions in four variables.

    ``coeffs`` has shape ``tensor_shape + (ncoef(order),)``. Arithmetic is
    elementwise over the tensor axes and truncating in the jet axis; mixing
    orders truncates to the lower one.
    """

    __slots__ = ("coeffs",)
    __array_priority__ = 100

    def __init__(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] not in _ORDER_OF:
            raise ValueError(f"invalid coefficient count {coeffs.shape[-1]}")
        self.coeffs = coeffs

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (_NCOEF[order],))
        c[..., 0] = value
        return cls(c)

    @classmethod
    def variable(cls, value: float, var: int, order: int) -> "Jet":
        c = np.zeros(_NCOEF[order])
        c[0] = value
        if order >= 1:
            mu = [0] * NVARS
            mu[var] = 1
            c[INDEX[tuple(mu)]] = 1.0
        return cls(c)

    @classmethod
    def zeros(cls, shape, order: int) -> "Jet":
        return cls(np.zeros(tuple(shape) + (_NCOEF[order],)))

    @classmethod
    def stack(cls, jets, axis: int = 0) -> "Jet":
        k = min(j.order for j in jets)
        if axis < 0:
            raise ValueError("axis must be non-negative")
        return cls(np.stack([j.truncate(k).coeffs for j in jets], axis=axis))

    # structure --------------------------------------------------------
    @property
    def order(self) -> int:
        return _ORDER_OF[self.coeffs.shape[-1]]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape})"

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if Ellipsis in idx or len(idx) > len(self.shape):
            raise IndexError("jets index tensor axes only")
        return Jet(self.coeffs[idx])

    def __setitem__(self, idx, other):
        if not isinstance(idx, tuple):
            idx = (idx,)
        if Ellipsis in idx or len(idx) > len(self.shape):
            raise IndexError("jets index tensor axes only")
        view = self.coeffs[idx]
        if isinstance(other, Jet):
            if other.order < self.order:
                raise JetOrderError("cannot store a lower-order jet")
            view[...] = other.coeffs[..., : self.coeffs.shape[-1]]
        else:
            view[...] = 0.0
            view[..., 0] = other
        self.coeffs[idx] = view

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.coeffs[..., : _NCOEF[order]])

    def transpose(self, *axes) -> "Jet":
        axes = tuple(axes) + (len(self.shape),)
        return Jet(self.coeffs.transpose(axes))

    def reshape(self, *shape) -> "Jet":
        return Jet(self.coeffs.reshape(tuple(shape) + (self.coeffs.shape[-1],)))

    def copy(self) -> "Jet":
        return Jet(self.coeffs.copy())

    # coefficient access -----------------------------------------------
    def coefficient(self, mu) -> np.ndarray | float:
        """Normalized Taylor coefficient (derivative / mu!)."""
        mu = tuple(mu)
        if sum(mu) > self.order:
            raise JetOrderError(f"multi-index {mu} beyond order {self.order}")
        v = self.coeffs[..., INDEX[mu]]
        return float(v) if v.ndim == 0 else v

    def partial(self, mu) -> np.ndarray | float:
        """Partial derivative of multi-index ``mu`` at the base point."""
        mu = tuple(mu)
        return self.coefficient(mu) * math.prod(math.factorial(m) for m in mu)

    def derivatives(self) -> np.ndarray:
        """All partial derivatives, in coefficient order."""
        return self.coeffs * _FACT[: self.coeffs.shape[-1]]

    def d(self, var: int) -> "Jet":
        """Jet of the derivative along coordinate ``var``; one order lower."""
        k = self.order
        if k == 0:
            raise JetOrderError("no Taylor orders left to differentiate")
        src, w = _derivative_table(k, var)
        return Jet(self.coeffs[..., src] * w)

    def grad(self) -> "Jet":
        """Stack of derivatives along all four coordinates as a trailing tensor axis."""
        parts = [self.d(v).coeffs for v in range(NVARS)]
        return Jet(np.stack(parts, axis=-2))

    # arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            k = min(self.order, other.order)
            return self.truncate(k).coeffs, other.truncate(k).coeffs, k
        return None

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is None:
            other = np.asarray(other, dtype=float)
            shape = np.broadcast_shapes(self.shape, other.shape)
            c = np.broadcast_to(self.coeffs, shape + self.coeffs.shape[-1:]).copy()
            c[..., 0] += other
            return Jet(c)
        a, b, _ = pair
        return Jet(a + b)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return Jet(self.coeffs * np.asarray(other, dtype=float)[..., None])
        a, b, k = pair
        return Jet(_mul(a, b, k))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return Jet(self.coeffs / np.asarray(other, dtype=float)[..., None])

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)) or (np.ndim(n) == 0 and float(n).is_integer()):
            n = int(n)
            if n == 0:
                return Jet.constant(np.ones(self.shape), self.order)
            if n < 0:
                return reciprocal(self) ** (-n)
            result = None
            base = self
            while n:
                if n & 1:
                    result = base if result is None else result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        if isinstance(n, Jet):
            return exp(n * log(self))
        return _apply_series(self, lambda a, k: _pow_derivs(a, float(n), k))


def _mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    ia, ib, starts = _product_table(order)
    prod = a[..., ia] * b[..., ib]
    return np.add.reduceat(prod, starts, axis=-1)


def einsum(subscripts: str, a: Jet, b: Jet) -> Jet:
    """``np.einsum`` over tensor axes with jet products in the coefficient axis."""
    k = min(a.order, b.order)
    ia, ib, starts = _product_table(k)
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    prod = np.einsum(f"{sa}Z,{sb}Z->{out}Z",
                     a.coeffs[..., : _NCOEF[k]][..., ia],
                     b.coeffs[..., : _NCOEF[k]][..., ib],
                     optimize=True)
    return Jet(np.add.reduceat(prod, starts, axis=-1))


def contract(subscripts: str, jet: Jet, array) -> Jet:
    """``np.einsum`` of a jet against a constant numpy array (no products of jets)."""
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    return Jet(np.einsum(f"{sa}Z,{sb}->{out}Z", jet.coeffs, np.asarray(array, dtype=float)))


# elementary functions ----------------------------------------------------

def _apply_series(x: Jet, derivs) -> Jet:
    """f(x) from the Taylor series of f about the value part of ``x``.

    ``derivs(a, k)`` returns ``[f(a), f'(a), ..., f^(k)(a)]`` as arrays.
    """
    k = x.order
    a = x.coeffs[..., 0]
    ds = derivs(a, k)
    n = Jet(x.coeffs.copy())
    n.coeffs[..., 0] = 0.0
    out = Jet.constant(ds[0], k)
    power = None
    for j in range(1, k + 1):
        power = n if power is None else power * n
        out = out + power * (ds[j] / math.factorial(j))
    return out


class JetDomainError(ValueError):
    """Raised when a function is evaluated outside its domain."""


def exp(x: Jet) -> Jet:
    return _apply_series(x, lambda a, k: [np.exp(a)] * (k + 1))


def log(x: Jet) -> Jet:
    a = x.coeffs[..., 0]
    if np.any(a <= 0):
        raise JetDomainError("log of a non-positive value")

    def derivs(a, k):
        out = [np.log(a)]
        for j in range(1, k + 1):
            out.append((-1) ** (j - 1) * math.factorial(j - 1) / a**j)
        return out

    return _apply_series(x, derivs)


def sin(x: Jet) -> Jet:
    return _apply_series(x, lambda a, k: [
        (np.sin(a), np.cos(a), -np.sin(a), -np.cos(a))[j % 4] for j in range(k + 1)
    ])


def cos(x: Jet) -> Jet:
    return _apply_series(x, lambda a, k: [
        (np.cos(a), -np.sin(a), -np.cos(a), np.sin(a))[j % 4] for j in range(k + 1)
    ])


def _pow_derivs(a, p: float, k: int):
    out = []
    coef = 1.0
    for j in range(k + 1):
        out.append(coef * a ** (p - j))
        coef *= p - j
    return out


def sqrt(x: Jet) -> Jet:
    if np.any(x.coeffs[..., 0] <= 0):
        raise JetDomainError("sqrt of a non-positive value")
    return _apply_series(x, lambda a, k: _pow_derivs(a, 0.5, k))


def reciprocal(x: Jet) -> Jet:
    a = x.coeffs[..., 0]
    if np.any(a == 0):
        raise JetDomainError("division by zero")
    return _apply_series(x, lambda a, k: _pow_derivs(a, -1.0, k))


# matrices -----------------------------------------------------------------

class SingularJetMatrix(ValueError):
    pass


def matrix_inverse(m: Jet) -> Jet:
    """Inverse of a square matrix of jets, exact to the truncation order.

    Splits ``m = m0 + n`` with ``n`` nilpotent (no constant terms) and sums the
    finite Neumann series ``sum_j (-m0^{-1} n)^j m0^{-1}``.
    """
    if len(m.shape) != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix_inverse needs a square matrix of jets")
    m0 = m.coeffs[..., 0]
    if np.linalg.cond(m0) > 1e14:
        raise SingularJetMatrix("value part of the jet matrix is singular")
    inv0 = np.linalg.inv(m0)
    k = m.order
    n = Jet(m.coeffs.copy())
    n.coeffs[..., 0] = 0.0
    step = -contract("ij,ki->kj", n, inv0)  # -(inv0 @ n)
    base = Jet.constant(inv0, k)
    term = base
    total = base
    for _ in range(k):
        term = einsum("ij,jk->ik", step, term)
        total = total + term
    return total


def matmul(a: Jet, b: Jet) -> Jet:
    return einsum("ij,jk->ik", a, b)
