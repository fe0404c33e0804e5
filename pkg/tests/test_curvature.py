import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from riemext.curvature import BACH_SIGN, CONVENTIONS, RICCI_SIGN, curvature_pack
from riemext.expr import Point4, evaluate, parse_expr
from riemext.extension import (DeformationField, EndoField, NilpotentSpec, ScaledMetric, build_metric,
                               canonical_endo)
from riemext.jets import JetOrderError
from riemext.sd import frame_sd
from riemext.surface import explicit_surface, type_a

seeds = st.integers(0, 2**31)


def _metric(seed, endo=None):
    rng = np.random.default_rng(seed)
    endo = endo or EndoField([[oracles.random_base_field(rng) for _ in range(2)] for _ in range(2)])
    phi = DeformationField.from_exprs(*(oracles.random_base_field(rng) for _ in range(3)))
    return build_metric(explicit_surface(oracles.random_gamma(rng)), endo, phi), oracles.random_point(rng)


@settings(max_examples=10)
@given(seeds)
def test_algebraic_symmetries(seed):
    m, p = _metric(seed)
    pk = curvature_pack(m, p, 2, upto="weyl")
    r = pk.riemann
    scale = 1 + np.max(np.abs(r))
    assert np.max(np.abs(r + r.transpose(1, 0, 2, 3))) < 1e-12 * scale
    assert np.max(np.abs(r + r.transpose(0, 1, 3, 2))) < 1e-12 * scale
    assert np.max(np.abs(r - r.transpose(2, 3, 0, 1))) < 1e-12 * scale
    bianchi = r + r.transpose(1, 2, 0, 3) + r.transpose(2, 0, 1, 3)
    assert np.max(np.abs(bianchi)) < 1e-12 * scale
    # the chosen lowering traces to the Ricci tensor on the first and third slots
    assert np.allclose(np.einsum("ik,ijkl->jl", pk.ginv, r), pk.ricci, atol=1e-11 * scale)
    assert np.allclose(pk.ricci, pk.ricci.T, atol=1e-11 * scale)
    w = pk.weyl
    assert np.max(np.abs(np.einsum("ik,ijkl->jl", pk.ginv, w))) < 1e-11 * scale


@settings(max_examples=5)
@given(seeds)
def test_second_bianchi_identity(seed):
    m, p = _metric(seed)
    pk = curvature_pack(m, p, 3, upto="riemann")
    dr = pk.nabla("riemann").value  # dr[i, j, k, l, m] = R_ijkl;m
    cyc = dr + dr.transpose(1, 4, 2, 3, 0) + dr.transpose(4, 0, 2, 3, 1)
    assert np.max(np.abs(cyc)) < 1e-10 * (1 + np.max(np.abs(dr)))


@settings(max_examples=5)
@given(seeds)
def test_bach_symmetric_and_trace_free(seed):
    m, p = _metric(seed)
    pk = curvature_pack(m, p)
    b = pk.bach
    scale = 1 + np.max(np.abs(b))
    assert np.max(np.abs(b - b.T)) < 1e-10 * scale
    assert abs(np.einsum("ij,ij->", pk.ginv, b)) < 1e-10 * scale


def test_riemann_operator_against_finite_differences():
    rng = np.random.default_rng(11)
    gam = oracles.random_gamma(rng)
    surf = explicit_surface(gam)
    t_txt = [["0.3+x1*x2", "1+0.2*x1"], ["0.1*x2", "-0.4+0.3*x1^2"]]
    phi_txt = ["1+x1*x2", "0.2*sin(x2)", "0.5+x1^2"]
    m = build_metric(surf, EndoField(t_txt), DeformationField.from_exprs(*phi_txt))
    t_nodes = [[parse_expr(s) for s in row] for row in t_txt]
    phi_nodes = [parse_expr(s) for s in phi_txt]

    def ev(node, a, b):
        return evaluate(node, Point4(a, b))

    g = oracles.extension_metric_fn(
        lambda a, b: surf.christoffel_at(Point4(a, b), 0).value,
        lambda a, b: np.array([[ev(n, a, b) for n in row] for row in t_nodes]),
        lambda a, b: np.array([[ev(phi_nodes[0], a, b), ev(phi_nodes[1], a, b)],
                               [ev(phi_nodes[1], a, b), ev(phi_nodes[2], a, b)]]),
    )
    p = Point4(0.2, -0.4, 0.3, 0.5)
    want = oracles.fd_riemann_operator(g, np.array(p))
    got = curvature_pack(m, p, 2, upto="riemann").riemann_op
    assert np.max(np.abs(got - want)) < 1e-6 * (1 + np.max(np.abs(want)))


def test_bach_conformal_weight():
    m, p = _metric(3, canonical_endo())
    factor = parse_expr("1.3+0.2*sin(x1)+0.1*y1*x2")
    phi = float(factor.jet(p, 0).value)
    b = curvature_pack(m, p, 6).bach
    b_scaled = curvature_pack(ScaledMetric(m, factor), p, 6).bach
    assert np.max(np.abs(b_scaled - phi**2 * b)) < 1e-9 * (1 + np.max(np.abs(b)))


def test_conventions_recorded():
    assert CONVENTIONS["bach_sign"] == BACH_SIGN == -1.0
    assert RICCI_SIGN == 1.0


def test_order_guard():
    m, p = _metric(0)
    with pytest.raises(JetOrderError):
        curvature_pack(m, p, 3)
    with pytest.raises(ValueError):
        curvature_pack(m, p, 4, upto="ricci")


def test_self_dual_anchors():
    surf = explicit_surface({"G11_1": "0.3*x2", "G12_1": "0.5+0.2*x1", "G12_2": "0.1*x1*x2",
                             "G22_1": "sin(x1)", "G22_2": "0.4"})
    spec = NilpotentSpec("1.2+0.1*x1*x2", "0.3+0.2*x1")
    m = build_metric(surf, spec, DeformationField.from_exprs("x1", 0, "x2"))
    p = Point4(0.3, -0.2, 0.4, 0.6)
    sd = frame_sd(m, p)
    a = 1.2 + 0.1 * p.x1 * p.x2
    xi = 0.3 + 0.2 * p.x1
    assert sd.wminus[0, 0] == pytest.approx(0.5 * a**2 * (xi**2 + 1) ** 2, rel=1e-10)
    rho_a = surf.ricci_affine(p).antisymmetric[0, 1]
    assert sd.wplus[0, 1] == pytest.approx(-2 * rho_a, abs=1e-12)
    for w in (sd.wplus, sd.wminus):
        assert np.allclose(w, w.T, atol=1e-12)


def test_type_a_nilpotent_bach_flat():
    surf = type_a({"G12_1": 1.0, "G12_2": 1.0})
    spec = NilpotentSpec("(1.2+0.3*sin(x2))*sqrt(exp(2*x1)+2+cos(x2))", 0)
    m = build_metric(surf, spec, DeformationField.from_exprs("x1^2+sin(x2)", "0.5*x1*x2", "cos(x1)"))
    b = curvature_pack(m, Point4(0.2, 0.5, -0.3, 0.7)).bach
    assert np.max(np.abs(b)) < 1e-9
