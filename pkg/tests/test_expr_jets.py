import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riemext import jets
from riemext.expr import (ParseError, Point4, UnknownIdentifier, depends_on_fiber, eval_jet,
                          evaluate, is_constant, parse_expr, to_text)
from riemext.jets import Jet, JetOrderError

coord = st.floats(-1.5, 1.5)
points = st.builds(Point4, coord, coord, coord, coord)


def test_node_count_of_reference_expression():
    assert parse_expr("2*exp(x1)+y1^2").node_count() == 7


def test_precedence_and_unary_minus():
    p = Point4(1.5, 2.0, 0.0, 0.0)
    assert evaluate(parse_expr("-x1^2"), p) == pytest.approx(-2.25)
    assert evaluate(parse_expr("(-x1)^2"), p) == pytest.approx(2.25)
    assert evaluate(parse_expr("x2^-2"), p) == pytest.approx(0.25)
    assert evaluate(parse_expr("1-2*3/4"), p) == pytest.approx(-0.5)
    assert evaluate(parse_expr("x1^0.5"), p) == pytest.approx(math.sqrt(1.5))


def test_negative_base_integer_power():
    assert evaluate(parse_expr("x1^3"), Point4(-2.0, 0.0)) == pytest.approx(-8.0)


@pytest.mark.parametrize("text,pos", [("x1 + * 2", 5), ("sin(x1", 6), ("x1 $ 2", 3), ("", 0)])
def test_parse_error_positions(text, pos):
    with pytest.raises(ParseError) as exc:
        parse_expr(text)
    assert exc.value.position == pos


def test_unknown_identifier_and_constants():
    with pytest.raises(UnknownIdentifier) as exc:
        parse_expr("1+kappa*x1")
    assert exc.value.position == 2
    assert evaluate(parse_expr("1+kappa*x1", {"kappa": 3.0}), Point4(2.0, 0.0)) == 7.0


def test_fiber_and_constant_detection():
    assert depends_on_fiber(parse_expr("x1+y2"))
    assert not depends_on_fiber(parse_expr("sin(x1*x2)"))
    assert is_constant(parse_expr("2*exp(1)"))
    assert not is_constant(parse_expr("x1"))


_atoms = st.sampled_from(["x1", "x2", "y1", "y2", "0.5", "2", "1.25"])


exprs = st.recursive(
    _atoms,
    lambda inner: st.one_of(
        st.tuples(inner, st.sampled_from("+-*"), inner).map(lambda t: f"({t[0]}{t[1]}{t[2]})"),
        inner.map(lambda s: f"-{s}"),
        st.tuples(inner, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        st.tuples(st.sampled_from(["sin", "cos", "exp"]), inner).map(lambda t: f"{t[0]}({t[1]})"),
    ),
    max_leaves=8,
)


@given(exprs, points)
def test_round_trip_through_text(text, p):
    node = parse_expr(text)
    again = parse_expr(to_text(node))
    assert to_text(again) == to_text(node)
    assert np.allclose(eval_jet(again, p, 2).coeffs, eval_jet(node, p, 2).coeffs, rtol=1e-12, atol=1e-12)


@given(exprs, points)
def test_jet_first_derivatives_match_differences(text, p):
    node = parse_expr(text)
    jet = eval_jet(node, p, 1)
    h = 1e-5
    for k in range(4):
        up, dn = list(p), list(p)
        up[k] += h
        dn[k] -= h
        fd = (evaluate(node, Point4(*up)) - evaluate(node, Point4(*dn))) / (2 * h)
        mu = tuple(int(i == k) for i in range(4))
        assert jet.partial(mu) == pytest.approx(fd, rel=1e-5, abs=1e-5)


def test_high_order_partials_of_exp_product():
    j = eval_jet(parse_expr("exp(x1)*sin(x2)"), Point4(0.3, 0.7), 6)
    assert j.partial((4, 2, 0, 0)) == pytest.approx(-math.exp(0.3) * math.sin(0.7))
    assert j.partial((0, 5, 0, 0)) == pytest.approx(math.exp(0.3) * math.cos(0.7))


def test_order_ceiling():
    with pytest.raises(JetOrderError):
        eval_jet(parse_expr("x1"), Point4(0.0, 0.0), 7)


@given(st.floats(0.5, 3.0), st.floats(-2, 2))
def test_series_functions_are_consistent(a, b):
    x = Jet.variable(a, 0, 5) + Jet.variable(b, 1, 5) * 0.1
    assert np.allclose(jets.log(jets.exp(x)).coeffs, x.coeffs, atol=1e-10)
    assert np.allclose((jets.sqrt(x) * jets.sqrt(x)).coeffs, x.coeffs, atol=1e-10)
    s, c = jets.sin(x), jets.cos(x)
    assert np.allclose((s * s + c * c).coeffs, Jet.constant(1.0, 5).coeffs, atol=1e-10)
    assert np.allclose((x * jets.reciprocal(x)).coeffs, Jet.constant(1.0, 5).coeffs, atol=1e-10)


def test_matrix_inverse_jet():
    rng = np.random.default_rng(7)
    order = 3
    m = Jet(rng.normal(size=(3, 3, jets.ncoef(order))))
    m.coeffs[..., 0] += 3 * np.eye(3)
    prod = jets.einsum("ij,jk->ik", m, jets.matrix_inverse(m))
    eye = Jet.constant(np.eye(3), order)
    assert np.allclose(prod.coeffs, eye.coeffs, atol=1e-10)


def test_mixed_orders_truncate():
    a = Jet.variable(1.0, 0, 4)
    b = Jet.variable(2.0, 1, 2)
    assert (a * b).order == 2


def test_array_points_broadcast():
    xs = np.linspace(0, 1, 5)
    j = eval_jet(parse_expr("x1^2+x2"), Point4(xs, 1.0), 1)
    assert j.shape == (5,)
    assert np.allclose(j.value, xs**2 + 1)
