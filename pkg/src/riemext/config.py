"""Scenario files: TOML sections describing a metric and what to evaluate on it.

A scenario names a surface, an endomorphism, a deformation and an evaluation
plan. Expressions are quoted strings in the expression grammar; named constants
live in ``[surface.constants]`` and are visible to every expression of the file.
A constant given as a list turns the file into a sweep, expanded as the
cartesian product of all such lists.

Example::

    [surface]
    kind = "typeA"
    constants = { G12_1 = 1.0, G12_2 = 1.0 }

    [endomorphism]
    kind = "canonical"

    [deformation]
    phi11 = "x1^2 + sin(x2)"

    [evaluation]
    random = { count = 5 }
    checks = ["bachflat"]
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .expr import ParseError, Point4, as_field, parse_expr
from .extension import (DeformationField, EndoField, NilpotentSpec, PiecewiseS23Endo,
                        build_metric, canonical_endo, mirrored_endo)
from .surface import GAMMA_KEYS, explicit_surface, remark12_surface, type_a, type_b

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Malformed scenario: bad TOML, unknown keys, wrong types or bad expressions."""


CHECKS = ("curvature", "bachflat", "invariants", "vsi", "zeros", "walker", "conformal", "identities")

_SECTIONS = {"surface", "endomorphism", "deformation", "evaluation", "name"}
_SURFACE_KEYS = {"kind", "constants", "entries", "domain"}
_SURFACE_KINDS = ("typeA", "typeB", "remark12", "explicit")
_REMARK12_KEYS = {"phi", "c", "G12_1", "G22_1", "G22_2"}
_ENDO_KEYS = {
    "explicit": {"kind", "T11", "T12", "T21", "T22"},
    "nilpotent_spec": {"kind", "alpha", "xi"},
    "canonical": {"kind", "mirrored"},
    "piecewise_s23": {"kind", "alpha"},
}
_DEFORMATION_KEYS = {"phi11", "phi12", "phi22"}
_EVALUATION_KEYS = {"points", "random", "grid", "order", "tol", "seed", "checks", "phi", "mirrored"}
_RANDOM_KEYS = {"count", "x1", "x2", "y1", "y2"}
_GRID_KEYS = {"x1", "x2", "y1", "y2"}


def _reject_unknown(table: Mapping, allowed, where: str) -> None:
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) {extra} in [{where}]; allowed: {sorted(allowed)}")


def _expect(value, types, where: str):
    types = types if isinstance(types, tuple) else (types,)
    if not isinstance(value, types) or (isinstance(value, bool) and bool not in types):
        names = "/".join(t.__name__ for t in types)
        raise ConfigError(f"{where} must be {names}, got {value!r}")
    return value


def _interval(value, where: str) -> tuple[float, float]:
    if not (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigError(f"{where} must be a [low, high] pair of numbers")
    lo, hi = float(value[0]), float(value[1])
    if not lo <= hi:
        raise ConfigError(f"{where} has low > high")
    return lo, hi


def _expr_field(text, constants, where: str):
    if isinstance(text, bool) or not isinstance(text, (str, int, float)):
        raise ConfigError(f"{where} must be an expression string or a number")
    try:
        return as_field(text, constants)
    except ParseError as exc:
        raise ConfigError(f"{where}: {exc} in {text!r}") from exc


@dataclass(frozen=True)
class Evaluation:
    points: tuple = ()
    random: Mapping[str, Any] | None = None
    grid: Mapping[str, Any] | None = None
    order: int = 4
    tol: float = 1e-8
    seed: int = 0
    checks: tuple = ("curvature",)
    phi: str | None = None
    mirrored: bool = False

    def sample_points(self, seed: int | None = None) -> list[Point4]:
        """Explicit points, then the seeded random ones, then the grid nodes."""
        out = [Point4(*map(float, q)) for q in self.points]
        if self.random is not None:
            rng = np.random.default_rng(self.seed if seed is None else seed)
            r = dict(self.random)
            box = [r.get(k, [-1.0, 1.0]) for k in ("x1", "x2", "y1", "y2")]
            for _ in range(int(r.get("count", 10))):
                out.append(Point4(*(float(rng.uniform(lo, hi)) for lo, hi in box)))
        if self.grid is not None:
            axes = [np.linspace(*self.grid[k][:2], int(self.grid[k][2])) if k in self.grid
                    else np.zeros(1) for k in ("x1", "x2", "y1", "y2")]
            out.extend(Point4(*map(float, q)) for q in itertools.product(*axes))
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario. ``constants`` holds scalars only; sweeps live in ``sweep``."""

    surface: Mapping[str, Any]
    endomorphism: Mapping[str, Any]
    deformation: Mapping[str, Any]
    evaluation: Evaluation
    constants: Mapping[str, float] = field(default_factory=dict)
    sweep: Mapping[str, tuple] = field(default_factory=dict)
    name: str = "scenario"

    # construction ---------------------------------------------------------

    def build_surface(self):
        s, c = self.surface, dict(self.constants)
        kind = s.get("kind", "explicit")
        entries = dict(s.get("entries", {}))
        domain = s.get("domain")
        if kind in ("typeA", "typeB"):
            if entries:
                raise ConfigError(f"[surface] kind {kind!r} takes constants, not entries")
            vals = {k: float(c.get(k, 0.0)) for k in GAMMA_KEYS}
            return type_a(vals) if kind == "typeA" else type_b(vals)
        if kind == "remark12":
            _reject_unknown(entries, _REMARK12_KEYS, "surface.entries")
            if "phi" not in entries or "c" not in entries:
                raise ConfigError("[surface.entries] of a remark12 surface needs phi and c")
            fields = {k: _expr_field(v, c, f"surface.entries.{k}") for k, v in entries.items()}
            return remark12_surface(fields["phi"], fields["c"], fields.get("G12_1", 0.0),
                                    fields.get("G22_1", 0.0), fields.get("G22_2", 0.0))
        _reject_unknown(entries, GAMMA_KEYS, "surface.entries")
        fields = {k: _expr_field(v, c, f"surface.entries.{k}") for k, v in entries.items()}
        dom = None if domain is None else (_interval(domain[0], "surface.domain[0]"),
                                           _interval(domain[1], "surface.domain[1]"))
        return explicit_surface(fields, domain=dom)

    def build_endomorphism(self) -> EndoField:
        e, c = self.endomorphism, dict(self.constants)
        kind = e.get("kind", "canonical")
        if kind == "canonical":
            return mirrored_endo() if e.get("mirrored", False) else canonical_endo()
        if kind == "explicit":
            f = {k: _expr_field(e.get(k, 0.0), c, f"endomorphism.{k}") for k in ("T11", "T12", "T21", "T22")}
            return EndoField([[f["T11"], f["T12"]], [f["T21"], f["T22"]]])
        if kind == "nilpotent_spec":
            return NilpotentSpec(_expr_field(e.get("alpha", 1.0), c, "endomorphism.alpha"),
                                 _expr_field(e.get("xi", 0.0), c, "endomorphism.xi"))
        return PiecewiseS23Endo(_expr_field(e.get("alpha", "x2^6"), c, "endomorphism.alpha"))

    def build_deformation(self) -> DeformationField:
        c = dict(self.constants)
        return DeformationField(*(_expr_field(self.deformation.get(k, 0.0), c, f"deformation.{k}")
                                  for k in ("phi11", "phi12", "phi22")))

    def build_metric(self):
        return build_metric(self.build_surface(), self.build_endomorphism(), self.build_deformation())

    def conformal_factor(self):
        if self.evaluation.phi is None:
            raise ConfigError("check 'conformal' needs evaluation.phi")
        return _expr_field(self.evaluation.phi, dict(self.constants), "evaluation.phi")

    def points(self, seed: int | None = None) -> list[Point4]:
        return self.evaluation.sample_points(seed)

    # sweeps ---------------------------------------------------------------

    def expand(self) -> list[tuple[dict, "ScenarioConfig"]]:
        """One scalar scenario per combination of the swept constants."""
        if not self.sweep:
            return [({}, self)]
        names = sorted(self.sweep)
        out = []
        for combo in itertools.product(*(self.sweep[n] for n in names)):
            binding = dict(zip(names, combo))
            out.append((binding, replace(self, constants={**self.constants, **binding}, sweep={})))
        return out

    def with_overrides(self, order: int | None = None, tol: float | None = None,
                       seed: int | None = None) -> "ScenarioConfig":
        kw = {k: v for k, v in (("order", order), ("tol", tol), ("seed", seed)) if v is not None}
        return replace(self, evaluation=replace(self.evaluation, **kw)) if kw else self

    def as_dict(self) -> dict:
        ev = self.evaluation
        return {
            "name": self.name,
            "surface": dict(self.surface),
            "endomorphism": dict(self.endomorphism),
            "deformation": dict(self.deformation),
            "constants": dict(self.constants),
            "sweep": {k: list(v) for k, v in self.sweep.items()},
            "evaluation": {"points": [list(p) for p in ev.points], "random": ev.random, "grid": ev.grid,
                           "order": ev.order, "tol": ev.tol, "seed": ev.seed, "checks": list(ev.checks),
                           "phi": ev.phi, "mirrored": ev.mirrored},
        }


def _parse_surface(table) -> tuple[dict, dict, dict]:
    _expect(table, dict, "[surface]")
    _reject_unknown(table, _SURFACE_KEYS, "surface")
    kind = table.get("kind", "explicit")
    if kind not in _SURFACE_KINDS:
        raise ConfigError(f"[surface] kind must be one of {_SURFACE_KINDS}, got {kind!r}")
    consts, sweep = {}, {}
    for k, v in _expect(table.get("constants", {}), dict, "[surface.constants]").items():
        if isinstance(v, list):
            if not v or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
                raise ConfigError(f"sweep list surface.constants.{k} must be non-empty numbers")
            sweep[k] = tuple(float(x) for x in v)
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            consts[k] = float(v)
        else:
            raise ConfigError(f"surface.constants.{k} must be a number or a list of numbers")
    if kind in ("typeA", "typeB"):
        bad = sorted(k for k in {**consts, **sweep} if k not in GAMMA_KEYS and k.startswith("G"))
        if bad:
            raise ConfigError(f"unknown Christoffel constant(s) {bad}; use {GAMMA_KEYS}")
    _expect(table.get("entries", {}), dict, "[surface.entries]")
    return dict(table), consts, sweep


def _parse_evaluation(table) -> Evaluation:
    _expect(table, dict, "[evaluation]")
    _reject_unknown(table, _EVALUATION_KEYS, "evaluation")
    pts = table.get("points", [])
    if not isinstance(pts, list) or not all(
            isinstance(q, list) and len(q) == 4
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in q) for q in pts):
        raise ConfigError("evaluation.points must be a list of [x1, x2, y1, y2]")
    rnd = table.get("random")
    if rnd is not None:
        _expect(rnd, dict, "evaluation.random")
        _reject_unknown(rnd, _RANDOM_KEYS, "evaluation.random")
        for k in ("x1", "x2", "y1", "y2"):
            if k in rnd:
                _interval(rnd[k], f"evaluation.random.{k}")
        _expect(rnd.get("count", 10), int, "evaluation.random.count")
    grid = table.get("grid")
    if grid is not None:
        _expect(grid, dict, "evaluation.grid")
        _reject_unknown(grid, _GRID_KEYS, "evaluation.grid")
        for k, v in grid.items():
            if not (isinstance(v, list) and len(v) == 3 and isinstance(v[2], int) and v[2] > 0):
                raise ConfigError(f"evaluation.grid.{k} must be [low, high, count]")
    if not pts and rnd is None and grid is None:
        rnd = {"count": 10}
    checks = table.get("checks", ["curvature"])
    if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
        raise ConfigError("evaluation.checks must be a list of strings")
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown check(s) {unknown}; known: {list(CHECKS)}")
    order = _expect(table.get("order", 4), int, "evaluation.order")
    if not 2 <= order <= 6:
        raise ConfigError("evaluation.order must lie in 2..6")
    tol = float(_expect(table.get("tol", 1e-8), (int, float), "evaluation.tol"))
    phi = table.get("phi")
    if phi is not None:
        _expect(phi, str, "evaluation.phi")
    return Evaluation(tuple(tuple(map(float, q)) for q in pts), rnd, grid, order, tol,
                      _expect(table.get("seed", 0), int, "evaluation.seed"), tuple(checks), phi,
                      bool(_expect(table.get("mirrored", False), bool, "evaluation.mirrored")))


def scenario_from_dict(data: Mapping[str, Any], name: str = "scenario") -> ScenarioConfig:
    """Validate a decoded TOML document and bind every expression once as a syntax check."""
    _reject_unknown(data, _SECTIONS, "top level")
    surface, consts, sweep = _parse_surface(data.get("surface", {"kind": "explicit"}))
    endo = _expect(data.get("endomorphism", {"kind": "canonical"}), dict, "[endomorphism]")
    kind = endo.get("kind", "canonical")
    if kind not in _ENDO_KEYS:
        raise ConfigError(f"[endomorphism] kind must be one of {tuple(_ENDO_KEYS)}, got {kind!r}")
    _reject_unknown(endo, _ENDO_KEYS[kind], "endomorphism")
    deformation = _expect(data.get("deformation", {}), dict, "[deformation]")
    _reject_unknown(deformation, _DEFORMATION_KEYS, "deformation")
    cfg = ScenarioConfig(surface, dict(endo), dict(deformation), _parse_evaluation(data.get("evaluation", {})),
                         consts, sweep, str(data.get("name", name)))
    # parse every expression now so errors surface before any evaluation
    probe = cfg.expand()[0][1]
    probe.build_surface()
    probe.build_endomorphism()
    probe.build_deformation()
    if probe.evaluation.phi is not None:
        probe.conformal_factor()
    return cfg


def loads(text: str, name: str = "scenario") -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from exc
    return scenario_from_dict(data, name)


def load(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return loads(text, path.stem)


def parse_check(text: str, constants: Mapping[str, float] | None = None):
    """Parse a single expression, mapping grammar errors to :class:`ConfigError`."""
    try:
        return parse_expr(text, constants)
    except ParseError as exc:
        raise ConfigError(f"{exc} in {text!r}") from exc
