"""Scalar expressions over the coordinates ``x1, x2, y1, y2``.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | atom ('^' ('-')? atom)?
    atom   := NUMBER | IDENT | '(' expr ')' | FUNC '(' expr ')'

``IDENT`` is a coordinate or a named constant supplied at parse time, ``FUNC``
one of ``exp, log, sin, cos, sqrt``. Expressions are evaluated into jets, which
is where all differentiation happens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from . import jets
from .jets import Jet, JetDomainError, JetOrderError, MAX_ORDER

COORDINATES = ("x1", "x2", "y1", "y2")
FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")


class Point4(NamedTuple):
    """A point of the cotangent bundle, base coordinates first."""

    x1: float
    x2: float
    y1: float = 0.0
    y2: float = 0.0

    def check(self) -> "Point4":
        if not all(np.all(np.isfinite(v)) for v in self):
            raise ValueError(f"non-finite point {tuple(self)}")
        return self


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifier(ParseError):
    pass


# AST ----------------------------------------------------------------------

class Node:
    __slots__ = ()

    def jet(self, p: Point4, order: int) -> Jet:
        return eval_jet(self, p, order)

    def __str__(self):
        return to_text(self)

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children())

    def children(self) -> tuple["Node", ...]:
        return ()


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str

    @property
    def index(self) -> int:
        return COORDINATES.index(self.name)


@dataclass(frozen=True)
class Const(Node):
    name: str
    value: float


@dataclass(frozen=True)
class Neg(Node):
    arg: Node

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class IntPow(Node):
    """Integer power; well defined for negative bases."""

    base: Node
    exponent: int

    def children(self):
        return (self.base,)


@dataclass(frozen=True)
class Func(Node):
    name: str
    arg: Node

    def children(self):
        return (self.arg,)


# parsing ------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, constants: Mapping[str, float]):
        self.toks = _tokenize(text)
        self.i = 0
        self.constants = constants

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, pos = self.take()
        if v != value:
            raise ParseError(f"expected {value!r}, found {v or 'end of input'!r}", pos)

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.factor())
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            negative = False
            if self.peek()[1] == "-":
                self.take()
                negative = True
            exponent = self.atom()
            if isinstance(exponent, Num) and float(exponent.value).is_integer():
                n = int(exponent.value)
                return IntPow(base, -n if negative else n)
            if negative:
                exponent = Neg(exponent)
            return BinOp("^", base, exponent)
        return base

    def atom(self) -> Node:
        kind, v, pos = self.take()
        if kind == "num":
            return Num(float(v))
        if kind == "id":
            if v in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(v, arg)
            if v in COORDINATES:
                return Var(v)
            if v in self.constants:
                return Const(v, float(self.constants[v]))
            raise UnknownIdentifier(f"unknown identifier {v!r}", pos)
        if v == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {v or 'end of input'!r}", pos)


def parse_expr(text: str, constants: Mapping[str, float] | None = None) -> Node:
    """Parse ``text`` into an expression tree; named constants are bound now."""
    if isinstance(text, (int, float)):
        return Num(float(text))
    p = _Parser(str(text), constants or {})
    node = p.expr()
    kind, v, pos = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing {v!r}", pos)
    return node


def as_field(value, constants: Mapping[str, float] | None = None):
    """Coerce strings and numbers to expressions; pass field objects through."""
    if isinstance(value, (str, int, float)):
        return parse_expr(value, constants)
    if hasattr(value, "jet"):
        return value
    raise TypeError(f"cannot use {value!r} as a scalar field")


def _num_text(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def to_text(node: Node) -> str:
    """Fully parenthesized text; ``parse_expr(to_text(e))`` rebuilds ``e``."""
    if isinstance(node, Num):
        s = _num_text(node.value)
        return f"({s})" if node.value < 0 else s
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)}{node.op}{to_text(node.right)})"
    if isinstance(node, IntPow):
        return f"({to_text(node.base)}^{node.exponent})" if node.exponent >= 0 else \
            f"({to_text(node.base)}^-{-node.exponent})"
    if isinstance(node, Func):
        return f"{node.name}({to_text(node.arg)})"
    raise TypeError(node)


def constants_of(node: Node) -> dict[str, float]:
    out = {}
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Const):
            out[n.name] = n.value
        stack.extend(n.children())
    return out


# evaluation ---------------------------------------------------------------

_JET_FUNCS = {"exp": jets.exp, "log": jets.log, "sin": jets.sin, "cos": jets.cos, "sqrt": jets.sqrt}


def eval_jet(node: Node, p: Point4, order: int = 4) -> Jet:
    """Taylor coefficients of ``node`` at ``p`` up to ``order``.

    Point coordinates may be numpy arrays of a common shape, in which case the
    jet carries that shape as its tensor shape.
    """
    if order > MAX_ORDER:
        raise JetOrderError(f"order {order} exceeds the maximum {MAX_ORDER}")
    p = Point4(*p)
    shape = np.broadcast_shapes(*(np.shape(v) for v in p))
    cache: dict[int, Jet] = {}

    def var(i):
        if i not in cache:
            c = np.zeros(shape + (jets.ncoef(order),))
            c[..., 0] = p[i]
            if order >= 1:
                mu = [0] * 4
                mu[i] = 1
                c[..., jets.INDEX[tuple(mu)]] = 1.0
            cache[i] = Jet(c)
        return cache[i]

    def ev(n):
        if isinstance(n, (Num, Const)):
            return Jet.constant(np.full(shape, n.value), order)
        if isinstance(n, Var):
            return var(n.index)
        if isinstance(n, Neg):
            return -ev(n.arg)
        if isinstance(n, BinOp):
            a, b = ev(n.left), ev(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            if n.op == "/":
                return a / b
            if np.any(a.coeffs[..., 0] <= 0):
                raise JetDomainError("non-integer power of a non-positive value")
            return jets.exp(b * jets.log(a))
        if isinstance(n, IntPow):
            return ev(n.base) ** n.exponent
        if isinstance(n, Func):
            return _JET_FUNCS[n.name](ev(n.arg))
        raise TypeError(n)

    return ev(node)


def evaluate(node: Node, p: Point4):
    """Plain value of ``node`` at ``p`` (arrays broadcast)."""
    return eval_jet(node, p, 0).value


ZERO = Num(0.0)
ONE = Num(1.0)


def is_zero(field) -> bool:
    return isinstance(field, Num) and field.value == 0.0


def depends_on_fiber(node) -> bool:
    if not isinstance(node, Node):
        return True
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Var) and n.name in ("y1", "y2"):
            return True
        stack.extend(n.children())
    return False


def is_constant(node) -> bool:
    if not isinstance(node, Node):
        return False
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            return False
        stack.extend(n.children())
    return True

