import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from riemext.bachflat import (AlphaVanishes, PDEOperands, p2_eval, q_identities, thm11_check)
from riemext.curvature import curvature_pack
from riemext.expr import Point4
from riemext.extension import DeformationField, NilpotentSpec, build_metric
from riemext.normalize import NormalizationError, normalize_nilpotent
from riemext.ode import LinearProfile
from riemext.pde import (FieldOnGrid, PDEAbort, StripGrid, method_agreement, solve_p1, solve_p2,
                         verify_bach_on_grid)
from riemext.surface import explicit_surface, flat_surface, type_a

REFERENCE = type_a({"G12_1": 1.0, "G12_2": 1.0})


def test_printed_p2_bracket_regression():
    # flat connection and constant xi make P1 vanish identically
    spec = NilpotentSpec("1+0.3*x1*x2+0.1*x1^2", "0.2")
    p = Point4(0.5, 0.7, 0.4, 0.6)
    rep = q_identities(flat_surface(), spec, p, p1_solved=True)
    assert rep.p1 == 0.0
    assert rep.b22_residual < 1e-12
    ops = PDEOperands.at(flat_surface(), spec, p)
    printed = abs(rep.bach[1, 1] + 4 * p2_eval(ops, displayed=True))
    assert printed == pytest.approx(8 * ops.xi * ops.a * ops.a10 * ops.a01, rel=1e-10)
    assert printed > 1e-2


@settings(max_examples=8)
@given(st.integers(0, 2**31))
def test_q3_identity_on_random_data(seed):
    rng = np.random.default_rng(seed)
    surf = explicit_surface(oracles.random_gamma(rng))
    spec = NilpotentSpec("1.5+" + oracles.random_base_field(rng, 0.3), oracles.random_base_field(rng))
    rep = q_identities(surf, spec, oracles.random_point(rng))
    assert rep.q3_residual < 1e-9 * (1 + abs(rep.q3))
    assert rep.mixed_block < 1e-10 and rep.fiber_block < 1e-10


def test_alpha_must_not_vanish():
    with pytest.raises(AlphaVanishes):
        q_identities(flat_surface(), NilpotentSpec("x1", 0), Point4(0.0, 0.3))


def test_bach_is_independent_of_deformation():
    rng = np.random.default_rng(3)
    surf = explicit_surface(oracles.random_gamma(rng))
    spec = NilpotentSpec("1.2+0.1*x1*x2", "0.3+0.2*x1")
    p = Point4(0.3, -0.2, 0.4, 0.6)
    b0 = curvature_pack(build_metric(surf, spec), p).bach
    b1 = curvature_pack(build_metric(surf, spec, DeformationField.from_exprs("x1^2", "sin(x2)", "x1*x2")),
                        p).bach
    assert np.max(np.abs(b0)) > 0.1
    assert np.max(np.abs(b1 - b0)) < 1e-12


def test_canonical_criterion_residuals():
    assert thm11_check(type_a({"G11_1": 0.4, "G12_2": 0.4, "G12_1": 1.0}), Point4(0.1, 0.2)).satisfied()
    bad = thm11_check(type_a({"G11_1": 0.4, "G12_2": 0.1}), Point4(0.1, 0.2))
    assert not bad.satisfied()
    assert bad.second == pytest.approx(0.4**2 - 0.4 * 0.1)


def test_linear_profile_matches_closed_form():
    prof = LinearProfile(1.0, 0.7, -0.2)
    w = 1 / math.sqrt(2)
    for x in (-1.3, 0.0, 0.4, 2.1):
        j = prof.jet(Point4(0.0, x), 3)
        val = 0.7 * math.cos(w * x) - 0.2 / w * math.sin(w * x)
        der = -0.7 * w * math.sin(w * x) - 0.2 * math.cos(w * x)
        assert j.value == pytest.approx(val, abs=1e-10)
        assert j.partial((0, 1, 0, 0)) == pytest.approx(der, abs=1e-10)
        assert j.partial((0, 2, 0, 0)) == pytest.approx(-0.5 * val, abs=1e-10)
        assert j.partial((0, 3, 0, 0)) == pytest.approx(-0.5 * der, abs=1e-10)


def test_p1_with_zero_data_stays_zero_and_alpha_is_exact():
    grid = StripGrid(1.0, 64, 16)
    xi = solve_p1(REFERENCE, 0, grid)
    assert np.max(np.abs(xi.values)) == 0.0
    alpha = solve_p2(REFERENCE, xi, "sqrt(2)", "1/sqrt(2)")
    assert np.max(np.abs(alpha.values - np.sqrt(np.exp(2 * grid.x1[:, None]) + 1))) < 1e-8


@pytest.mark.parametrize("a,b", [(2.0, 1.0), (1.0, 0.5), (3.0, -1.0)])
def test_flat_alpha_is_square_root_profile(a, b):
    grid = StripGrid(1.0, 64, 16)
    xi = solve_p1(flat_surface(), 0, grid)
    alpha = solve_p2(flat_surface(), xi, repr(math.sqrt(a)), repr(b / (2 * math.sqrt(a))))
    assert np.max(np.abs(alpha.values - np.sqrt(a + b * grid.x1[:, None]))) < 1e-8


def test_cfl_abort():
    with pytest.raises(PDEAbort, match="CFL"):
        solve_p1(flat_surface(), "5*sin(x2)", StripGrid(1.0, 4, 64))


def test_alpha_floor_abort():
    grid = StripGrid(1.0, 32, 16)
    xi = solve_p1(flat_surface(), 0, grid)
    with pytest.raises(PDEAbort):
        solve_p2(flat_surface(), xi, "1", "-2")


def test_grid_validation():
    with pytest.raises(ValueError):
        StripGrid(1.0, 16, 7)
    g = StripGrid(1.0, 16, 16)
    assert len(g.x1) == 17 and g.refine().n1 == 32


def test_perturbed_xi_is_detected():
    grid = StripGrid(1.0, 64, 32)
    xi = solve_p1(REFERENCE, "0.05*sin(x2)", grid)
    alpha = solve_p2(REFERENCE, xi, "1+0.05*cos(x2)", "0.05*sin(x2)")
    good = verify_bach_on_grid(REFERENCE, xi, alpha).max_bach
    X1, X2 = np.meshgrid(grid.x1, grid.x2, indexing="ij")
    bent = FieldOnGrid(grid, xi.values + 0.02 * X1 * np.cos(X2), xi.dx1)
    bad = verify_bach_on_grid(REFERENCE, bent, alpha).max_bach
    assert good < 1e-2
    assert bad > 1e-4 and bad > 10 * good


def test_rk2_and_rk4_agree_at_second_order():
    diffs = method_agreement(REFERENCE, "0.05*sin(x2)", StripGrid(1.0, 32, 32), levels=3)
    assert all(3.5 < diffs[k] / diffs[k + 1] < 4.5 for k in range(2))


def test_normalization_pushes_forward_to_canonical():
    res = normalize_nilpotent(NilpotentSpec("1+0.3*sin(x1+x2)", "0.5*x1-0.2*x2^2"), step=1 / 64)
    assert res.passed(1e-6)
    assert res.nilpotency_residual < 1e-10
    assert res.report()["nodes"] == [33, 33]


def test_normalization_needs_nonzero_endomorphism():
    with pytest.raises(NormalizationError):
        normalize_nilpotent(NilpotentSpec("x1", 0.3))
