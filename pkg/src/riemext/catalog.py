"""The worked-example catalog.

Each entry builds a scenario and lists the values its report must reproduce.
Every expected value carries a citation string and a provenance tag
(``PAPER`` for displayed values, ``DERIVED`` for values computed from a
displayed formula or by an independent argument).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import ScenarioConfig, scenario_from_dict
from .expr import Point4
from .invariants import beta_closed_forms
from .scenario import ScenarioResult, run_scenario
from .surface import GAMMA_KEYS

PROVENANCES = ("PAPER", "DERIVED", "TRIVIAL")


@dataclass(frozen=True)
class Expected:
    """``quantity`` compared at every sampled point.

    ``mode`` is ``"abs"`` (|actual - value| <= tol), ``"rel"`` (scaled by
    ``max(1, |value|)``) or ``"below"`` (actual < value). ``value`` may be a
    callable of ``(point, constants)``.
    """

    quantity: str
    value: float | Callable
    citation: str
    provenance: str
    tol: float = 1e-8
    mode: str = "abs"

    def target(self, p: Point4, constants) -> float:
        return float(self.value(p, constants)) if callable(self.value) else float(self.value)

    def compare(self, actual, p: Point4, constants) -> tuple[bool, float, float]:
        want = self.target(p, constants)
        if not isinstance(actual, (int, float)):
            return False, math.nan, want
        if self.mode == "below":
            return actual < want, float(actual), want
        err = abs(actual - want)
        if self.mode == "rel":
            err /= max(1.0, abs(want))
        return err <= self.tol, err, want


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    builder: Callable[[int], dict]
    expected: tuple = ()

    def config(self, seed: int = 0) -> ScenarioConfig:
        return scenario_from_dict(self.builder(seed), self.name)


def lookup(quantities: dict, path: str):
    """``"rho_affine.0.1"`` indexes nested lists; missing paths give ``None``."""
    cur = quantities
    for part in path.split("."):
        try:
            cur = cur[int(part)] if isinstance(cur, list) else cur[part]
        except (KeyError, IndexError, ValueError, TypeError):
            return None
    return cur


# builders -------------------------------------------------------------------

_BOX_B = {"x1": [0.5, 1.5], "x2": [-1.0, 1.0], "y1": [-1.0, 1.0], "y2": [-1.0, 1.0]}


def _example_4_2(seed):
    return {
        "surface": {"kind": "typeA", "constants": {"G12_1": 1.0, "G12_2": 1.0}},
        "endomorphism": {"kind": "nilpotent_spec", "alpha": "(1.2+0.3*sin(x2))*sqrt(exp(2*x1)+2+cos(x2))",
                         "xi": 0},
        "deformation": {"phi11": "x1^2+sin(x2)", "phi12": "0.5*x1*x2", "phi22": "cos(x1)"},
        "evaluation": {"random": {"count": 6}, "seed": seed,
                       "checks": ["curvature", "bachflat", "identities"]},
    }


def _example_4_3(seed):
    return {
        "surface": {"kind": "typeA",
                    "constants": {"G12_1": 0.7, "G12_2": 0.9, "G22_1": 0.3, "G22_2": -0.2}},
        "endomorphism": {"kind": "canonical"},
        "evaluation": {"random": {"count": 5}, "seed": seed, "phi": "exp(-G12_2*x1+G12_1*x2)",
                       "checks": ["conformal", "bachflat", "zeros"]},
    }


def _example_4_4(seed):
    c121, c122 = 0.7, 0.4
    return {
        "surface": {"kind": "typeB",
                    "constants": {"G11_1": 1.0, "G12_1": c121, "G12_2": c122, "G22_1": 0.3,
                                  "G22_2": c121 * (5 - 4 * c122)}},
        "endomorphism": {"kind": "canonical"},
        "deformation": {"phi11": "4*x1^-2*(G22_1+2*G12_1^2*(G12_2-1))"},
        "evaluation": {"random": dict(_BOX_B, count=5), "seed": seed, "phi": "1.7*x1^(2-G12_2)",
                       "checks": ["conformal", "bachflat"]},
    }


def _example_4_5(seed):
    return {
        "surface": {"kind": "remark12",
                    "entries": {"phi": "0.3*x1*x2+0.2*x1^2", "c": "1+0.4*sin(x2)", "G12_1": 0.5,
                                "G22_1": "0.2*x1", "G22_2": "0.1*x2"}},
        "endomorphism": {"kind": "explicit", "T12": "exp(0.3*cos(x2)+0.1*x2)"},
        "evaluation": {"random": {"count": 5}, "seed": seed, "checks": ["bachflat"]},
    }


def _example_4_6(seed):
    # constant gamma = 0.2 and d = 0.7; u = d_x2 f~ solves u' = 2 k u - 2 u^2
    return {
        "surface": {"kind": "remark12", "constants": {"k": 0.7 * math.exp(0.2)},
                    "entries": {"phi": "0.3*x1*x2+0.2*x1^2", "c": "1+0.4*sin(x2)", "G12_1": "k"}},
        "endomorphism": {"kind": "explicit", "T21": "exp(0.5*log(exp(2*k*x2)+1+0.2*x1^2))"},
        "evaluation": {"random": {"count": 5}, "seed": seed, "checks": ["bachflat"]},
    }


def _example_5_1(seed):
    return {
        "surface": {"kind": "explicit", "constants": {"theta": math.pi / 3}},
        "endomorphism": {"kind": "explicit", "T11": "(1+0.2*x1^2)*cos(theta)",
                         "T12": "(1+0.2*x1^2)*sin(theta)", "T21": "-(1+0.2*x1^2)*sin(theta)",
                         "T22": "(1+0.2*x1^2)*cos(theta)"},
        "evaluation": {"random": {"count": 5}, "seed": seed, "tol": 1e-10,
                       "checks": ["invariants", "vsi"]},
    }


def _example_6_3(seed):
    rng = np.random.default_rng(seed)
    consts = {k: float(np.round(rng.uniform(-1.0, 1.0), 6)) for k in GAMMA_KEYS}
    return {
        "surface": {"kind": "typeA", "constants": consts},
        "endomorphism": {"kind": "canonical"},
        "deformation": {"phi11": "1+0.5*x1^2", "phi22": "x2"},
        "evaluation": {"random": {"count": 5}, "seed": seed, "checks": ["invariants", "walker"]},
    }


_CASE1 = {"G11_1": 1.0, "G11_2": 0.0, "G12_1": 0.7, "G12_2": 0.4, "G22_1": 0.3, "G22_2": -0.2}
_CASE2 = {"G11_1": 0.6, "G11_2": 0.0, "G12_1": 0.7, "G12_2": 0.6, "G22_1": 0.3, "G22_2": -0.2}


def _example_6_4(consts):
    def build(seed):
        return {
            "surface": {"kind": "typeB", "constants": dict(consts)},
            "endomorphism": {"kind": "canonical"},
            "deformation": {"phi11": "0.5+0.3*x2"},
            "evaluation": {"random": dict(_BOX_B, count=5), "seed": seed, "checks": ["invariants"]},
        }

    return build


def _s23(seed):
    return {
        "surface": {"kind": "explicit"},
        "endomorphism": {"kind": "piecewise_s23", "alpha": "x2^6"},
        "deformation": {"phi11": "x1*x2", "phi22": "1+x1^2"},
        "evaluation": {"points": [[0.3, -0.8, 0.2, -0.4], [-0.6, -0.3, -0.5, 0.7],
                                  [0.3, 0.8, 0.2, -0.4], [-0.6, 0.3, -0.5, 0.7]],
                       "random": {"count": 4}, "seed": seed, "checks": ["bachflat", "curvature"]},
    }


def _beta(case: str, which: int):
    def value(p, consts):
        return beta_closed_forms(case, dict(consts), p.x1, p.y1, p.y2, phi11=0.5 + 0.3 * p.x2)[which]

    return value


def _rho_norm_pi3(p, consts):
    return -3.0 * (1 + 0.2 * p.x1**2) ** 4


CATALOG: dict[str, CatalogEntry] = {e.name: e for e in (
    CatalogEntry("example_4_2", "Type A surface with a nilpotent family, Bach flat for every deformation",
                 _example_4_2, (
                     Expected("max_bach", 1e-8, "Example 4.2", "PAPER", mode="below"),
                     Expected("rho_affine.0.0", -1.0, "Example 4.2", "PAPER"),
                     Expected("rho_affine.0.1", 1.0, "Example 4.2", "PAPER"),
                     Expected("rho_affine.1.1", -1.0, "Example 4.2", "PAPER"),
                     Expected("q3_residual", 1e-8, "Section 3", "DERIVED", mode="below"),
                 )),
    CatalogEntry("example_4_3", "Type A, canonical T, conformally Einstein with an explicit factor",
                 _example_4_3, (
                     Expected("brinkmann", 1e-8, "Example 4.3 (2)", "PAPER", mode="below"),
                     Expected("einstein", 1e-8, "Example 4.3 (2)", "DERIVED", mode="below"),
                     Expected("max_bach", 1e-8, "Example 4.3", "PAPER", mode="below"),
                     Expected("R2323", -1.0, "Section 5.2", "PAPER", tol=1e-10),
                 )),
    CatalogEntry("example_4_4", "Type B, case (1)(1)(b), conformally Einstein",
                 _example_4_4, (
                     Expected("brinkmann", 1e-8, "Example 4.4 (1)(1)(b)", "PAPER", mode="below"),
                     Expected("einstein", 1e-8, "Example 4.4 (1)(1)(b)", "DERIVED", mode="below"),
                     Expected("max_bach", 1e-8, "Example 4.4", "PAPER", mode="below"),
                 )),
    CatalogEntry("example_4_5", "Remark 1.2 family with T = e^f(x2) d_x1 (x) dx2",
                 _example_4_5, (Expected("max_bach", 1e-8, "Example 4.5", "PAPER", mode="below"),)),
    CatalogEntry("example_4_6", "Remark 1.2 family with the mirrored endomorphism",
                 _example_4_6, (Expected("max_bach", 1e-8, "Example 4.6", "PAPER", mode="below"),)),
    CatalogEntry("example_5_1_theta_pi3", "Rotation endomorphism at theta = pi/3",
                 _example_5_1, (
                     Expected("tau", 0.0, "Example 5.1 (1)", "PAPER", tol=1e-10),
                     Expected("normR2", 0.0, "Example 5.1 (1)", "PAPER", tol=1e-10),
                     Expected("normRho2", _rho_norm_pi3, "Example 5.1 (1)", "DERIVED", tol=1e-10,
                              mode="rel"),
                 )),
    CatalogEntry("example_6_3", "Random Type A surface: beta1 vanishes",
                 _example_6_3, (Expected("beta1", 0.0, "Example 6.3", "PAPER", tol=1e-10),)),
    CatalogEntry("example_6_4_case1", "Type B, C11^1 = 1: beta1 and beta2 closed forms",
                 _example_6_4(_CASE1), (
                     Expected("beta1", _beta("1", 0), "Example 6.4 (1)", "PAPER", mode="rel"),
                     Expected("beta2", _beta("1", 1), "Example 6.4 (1)", "PAPER", mode="rel"),
                 )),
    CatalogEntry("example_6_4_case2", "Type B, C12^2 = C11^1: beta1 and beta2 closed forms",
                 _example_6_4(_CASE2), (
                     Expected("beta1", _beta("2", 0), "Example 6.4 (2)", "PAPER", mode="rel"),
                     Expected("beta2", _beta("2", 1), "Example 6.4 (2)", "PAPER", mode="rel"),
                 )),
    CatalogEntry("s23_mixed_jordan", "Scalar for x2 <= 0, nilpotent for x2 > 0, Bach flat on both sides",
                 _s23, (Expected("max_bach", 1e-8, "Section 2.3", "PAPER", mode="below"),)),
)}


def catalog_list() -> list[str]:
    return list(CATALOG)


@dataclass
class CatalogRun:
    entry: CatalogEntry
    result: ScenarioResult
    comparisons: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.result.passed and all(c["passed"] for c in self.comparisons)

    def as_dict(self) -> dict:
        out = self.result.as_dict()
        out.update(entry=self.entry.name, description=self.entry.description,
                   expected=self.comparisons, passed=self.passed)
        return out


def catalog_run(name: str, seed: int = 0, order: int | None = None, tol: float | None = None) -> CatalogRun:
    if name not in CATALOG:
        raise KeyError(f"unknown catalog entry {name!r}; known: {catalog_list()}")
    entry = CATALOG[name]
    cfg = entry.config(seed).with_overrides(order=order, tol=tol)
    res = run_scenario(cfg)
    consts = dict(cfg.constants)
    comps = []
    for exp in entry.expected:
        worst, ok_all, rows = 0.0, True, []
        for p, q in zip(res.points, res.quantities):
            ok, err, want = exp.compare(lookup(q, exp.quantity), p, consts)
            ok_all &= bool(ok)
            if exp.mode != "below":
                worst = max(worst, err) if math.isfinite(err) else math.inf
            rows.append(want)
        comps.append({"quantity": exp.quantity, "mode": exp.mode, "tol": exp.tol,
                      "citation": exp.citation, "provenance": exp.provenance,
                      "passed": ok_all, "max_error": worst if exp.mode != "below" else None,
                      "targets": rows})
    return CatalogRun(entry, res, comps)
