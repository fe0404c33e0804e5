import pytest

from riemext.catalog import CATALOG, PROVENANCES, catalog_list, catalog_run, lookup
from riemext.config import ConfigError, load, loads, scenario_from_dict
from riemext.expr import Point4
from riemext.scenario import run_scenario

BASIC = """
name = "basic"

[surface]
kind = "typeA"
constants = { G12_1 = 1.0, G12_2 = 1.0 }

[endomorphism]
kind = "nilpotent_spec"
alpha = "sqrt(exp(2*x1)+1)"
xi = 0

[deformation]
phi11 = "x1^2 + sin(x2)"

[evaluation]
random = { count = 3 }
seed = 4
checks = ["bachflat", "curvature"]
"""


def test_basic_scenario_parses_and_passes():
    cfg = loads(BASIC)
    assert cfg.name == "basic"
    assert cfg.evaluation.checks == ("bachflat", "curvature")
    result = run_scenario(cfg)
    assert result.passed
    assert result.as_dict()["conventions"]["bach_sign"] == -1.0


def test_seeded_points_are_reproducible():
    a, b = loads(BASIC).points(), loads(BASIC).points()
    assert a == b
    assert loads(BASIC).points(seed=5) != a


@pytest.mark.parametrize("patch,needle", [
    ({"surface": {"kind": "typeA", "colour": 1}}, "colour"),
    ({"evaluation": {"checks": ["bach"]}}, "unknown check"),
    ({"evaluation": {"order": 9}}, "2..6"),
    ({"endomorphism": {"kind": "explicit", "T13": "x1"}}, "T13"),
    ({"deformation": {"phi33": 1}}, "phi33"),
    ({"extra": {}}, "extra"),
    ({"evaluation": {"random": {"count": 2, "x5": [0, 1]}}}, "x5"),
])
def test_unknown_keys_and_bad_values_are_rejected(patch, needle):
    data = {"surface": {"kind": "explicit"}, "endomorphism": {"kind": "canonical"}}
    data.update(patch)
    with pytest.raises(ConfigError, match=needle):
        scenario_from_dict(data)


def test_expression_errors_carry_positions():
    with pytest.raises(ConfigError, match="position 5"):
        scenario_from_dict({"deformation": {"phi11": "x1 + * 2"}})


def test_toml_syntax_error():
    with pytest.raises(ConfigError, match="TOML"):
        loads("[surface\nkind = 1")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "nope.toml")


def test_sweeps_expand_combinatorially():
    cfg = scenario_from_dict({
        "surface": {"kind": "typeA", "constants": {"G12_1": [0.5, 1.0], "G12_2": [0.1, 0.2, 0.3], "k": 2.0}},
        "deformation": {"phi11": "k*x1"},
        "evaluation": {"points": [[0.1, 0.2, 0.3, 0.4]]},
    })
    combos = cfg.expand()
    assert len(combos) == 6
    bindings = {(b["G12_1"], b["G12_2"]) for b, _ in combos}
    assert bindings == {(a, c) for a in (0.5, 1.0) for c in (0.1, 0.2, 0.3)}
    for b, sub in combos:
        assert sub.constants["k"] == 2.0 and not sub.sweep
        g = sub.build_surface().christoffel_at(Point4(0.0, 0.0), 0).value
        assert g[0, 1, 0] == b["G12_1"]


def test_grid_points():
    cfg = scenario_from_dict({"evaluation": {"grid": {"x1": [0, 1, 3], "y2": [-1, 1, 2]}}})
    pts = cfg.points()
    assert len(pts) == 6
    assert {p.x1 for p in pts} == {0.0, 0.5, 1.0}


def test_overrides():
    cfg = loads(BASIC).with_overrides(order=6, tol=1e-4)
    assert cfg.evaluation.order == 6 and cfg.evaluation.tol == 1e-4 and cfg.evaluation.seed == 4


def test_catalog_listing():
    names = catalog_list()
    assert len(names) == 10
    assert "example_6_4_case1" in names and "s23_mixed_jordan" in names


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_every_expected_value_is_tagged(name):
    entry = CATALOG[name]
    assert entry.expected
    for exp in entry.expected:
        assert exp.citation.strip(), f"{name}: {exp.quantity} lacks a citation"
        assert exp.provenance in PROVENANCES, f"{name}: {exp.quantity} has provenance {exp.provenance!r}"


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_entry_passes(name):
    run = catalog_run(name, seed=0)
    assert run.passed, run.as_dict()


def test_unknown_catalog_entry():
    with pytest.raises(KeyError):
        catalog_run("example_9_9")


def test_lookup_paths():
    q = {"rho_affine": [[1.0, 2.0], [3.0, 4.0]], "beta1": 0.5}
    assert lookup(q, "rho_affine.1.0") == 3.0
    assert lookup(q, "beta1") == 0.5


def test_example_6_3_reports_vanishing_beta1():
    d = catalog_run("example_6_3", seed=2).as_dict()
    assert d["passed"]
    assert all(abs(q["beta1"]) < 1e-10 for q in d["quantities"])


def test_rotation_example_quantities():
    d = catalog_run("example_5_1_theta_pi3").as_dict()
    assert len(d["points"]) == len(d["quantities"]) == 5
    for pt, q in zip(d["points"], d["quantities"]):
        r = 1 + 0.2 * pt[0] ** 2
        assert abs(q["tau"]) < 1e-10 and abs(q["normR2"]) < 1e-10
        assert q["normRho2"] == pytest.approx(-3 * r**4, rel=1e-10)
