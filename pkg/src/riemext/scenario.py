"""Execute a :class:`ScenarioConfig` and collect a deterministic report."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bachflat import q_identities
from .config import ScenarioConfig
from .conformal import brinkmann_E, einstein_residual
from .curvature import CONVENTIONS, curvature_pack
from .extension import NilpotentSpec
from .invariants import (Undefined, VSIVerdict, derivative_level_invariants, walker_blocks_passed,
                         walker_block_report, quadratic_invariants, vsi_classify, walker_invariants)
from .jets import MAX_ORDER
from .structure import structural_zeros


@dataclass
class CheckOutcome:
    name: str
    passed: bool | None
    residual: float | None = None
    tol: float | None = None
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "residual": self.residual,
                "tol": self.tol, "detail": self.detail}


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    binding: dict
    points: list
    quantities: list
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def as_dict(self) -> dict:
        ev = self.config.evaluation
        return {
            "scenario": self.config.as_dict(),
            "binding": self.binding,
            "conventions": dict(CONVENTIONS, jet_order=ev.order, max_jet_order=MAX_ORDER, tol=ev.tol),
            "points": [list(map(float, q)) for q in self.points],
            "quantities": self.quantities,
            "checks": [c.as_dict() for c in self.checks],
            "passed": self.passed,
        }


def _beta(v):
    return {"undefined": v.reason} if isinstance(v, Undefined) else float(v)


def _point_quantities(metric, p, order: int, checks, cfg: ScenarioConfig) -> dict:
    upto = "bach" if {"curvature", "bachflat"} & set(checks) else "riemann"
    pack = curvature_pack(metric, p, order, upto=upto)
    inv = quadratic_invariants(pack)
    q = {"tau": inv.tau, "normRho2": inv.norm_rho2, "normR2": inv.norm_r2,
         "max_riemann": float(np.max(np.abs(pack.riemann))),
         "max_ricci": float(np.max(np.abs(pack.ricci)))}
    if pack.bach is not None:
        q["max_weyl"] = float(np.max(np.abs(pack.weyl)))
        q["max_bach"] = float(np.max(np.abs(pack.bach)))
    q["rho_affine"] = metric.surface.ricci_affine(p).rho.tolist()
    if "invariants" in checks or "walker" in checks:
        w = walker_invariants(metric, p, mirrored=cfg.evaluation.mirrored, order=max(order, 4))
        q["beta1"], q["beta2"] = _beta(w.beta1), _beta(w.beta2)
        q["Omega_h"] = float(w.omega_h_form)
    if "vsi" in checks:
        rep = vsi_classify(pack, cfg.evaluation.tol, endo_value=metric.endo.value(p))
        d = derivative_level_invariants(metric, p, max(order, 4))
        q.update(vsi_verdict=rep.verdict.value, jordan=rep.jordan.value,
                 normNablaR2=d.norm_nabla_r2, normNablaW2=d.norm_nabla_w2, cubic=d.cubic,
                 classifier_a=inv.classifier_a, classifier_b=inv.classifier_b,
                 vsi_consistent=rep.consistent)
    if "zeros" in checks:
        z = structural_zeros(metric, p, cfg.evaluation.tol)
        q["zeros_offenders"] = list(z.offenders)
        q["zeros_residual"] = max(z.max_inverse_metric, z.max_christoffel, z.max_riemann,
                                  abs(z.r2323 + 1.0))
        q["R2323"] = z.r2323
    if "walker" in checks:
        q["walker_blocks"] = walker_block_report(metric, p)
    if "conformal" in checks:
        phi = cfg.conformal_factor()
        q["brinkmann"] = float(np.max(np.abs(brinkmann_E(metric, phi, p))))
        q["einstein"] = einstein_residual(metric, phi, p)
    if "identities" in checks:
        rep = q_identities(metric.surface, metric.endo, p, metric.deformation)
        q.update(q3_residual=rep.q3_residual, mixed_block=rep.mixed_block,
                 fiber_block=rep.fiber_block, P1=rep.p1, P2=rep.p2)
    return q


def _outcome(name, values, tol, detail=None) -> CheckOutcome:
    worst = max(values) if values else 0.0
    return CheckOutcome(name, bool(worst < tol), float(worst), tol, detail or {})


def run_scenario(cfg: ScenarioConfig, binding: dict | None = None) -> ScenarioResult:
    """Evaluate every requested check at every sampled point."""
    ev = cfg.evaluation
    checks = ev.checks
    if "identities" in checks and not isinstance(cfg.build_endomorphism(), NilpotentSpec):
        from .config import ConfigError

        raise ConfigError("check 'identities' needs endomorphism kind 'nilpotent_spec'")
    metric = cfg.build_metric()
    points = cfg.points()
    quantities = [_point_quantities(metric, p, ev.order, checks, cfg) for p in points]
    tol = ev.tol
    out = []
    if "curvature" in checks:
        out.append(CheckOutcome("curvature", None, max(q.get("max_bach", 0.0) for q in quantities)))
    if "bachflat" in checks:
        out.append(_outcome("bachflat", [q["max_bach"] for q in quantities], tol))
    if "invariants" in checks:
        out.append(CheckOutcome("invariants", None))
    if "vsi" in checks:
        agree = all(q["vsi_consistent"] for q in quantities)
        nil = [q for q in quantities if q["vsi_verdict"] == VSIVerdict.NILPOTENT.value]
        keys = ("tau", "normRho2", "normR2", "normNablaR2", "normNablaW2", "cubic")
        worst = max((abs(q[k]) for q in nil for k in keys), default=0.0)
        out.append(CheckOutcome("vsi", agree and worst < tol, worst, tol,
                                {"jordan_agreement": agree, "nilpotent_points": len(nil)}))
    if "zeros" in checks:
        out.append(_outcome("zeros", [q["zeros_residual"] for q in quantities], tol))
    if "walker" in checks:
        ok = all(walker_blocks_passed(q["walker_blocks"], max(tol, 1e-10)) for q in quantities)
        worst = max(max(q["walker_blocks"].values()) for q in quantities)
        out.append(CheckOutcome("walker", ok, worst, max(tol, 1e-10)))
    if "conformal" in checks:
        out.append(_outcome("conformal", [max(q["brinkmann"], q["einstein"]) for q in quantities], tol))
    if "identities" in checks:
        out.append(_outcome("identities", [max(q["q3_residual"], q["mixed_block"], q["fiber_block"])
                                           for q in quantities], tol))
    return ScenarioResult(cfg, dict(binding or {}), points, quantities, out)


def run_sweep(cfg: ScenarioConfig) -> list[ScenarioResult]:
    return [run_scenario(c, b) for b, c in cfg.expand()]


def csv_rows(result: ScenarioResult) -> list[dict]:
    """Grid-sweep rows with the documented columns."""
    rows = []
    for p, q in zip(result.points, result.quantities):
        flags = [c.name for c in result.checks if c.passed is False]
        b1, b2 = q.get("beta1"), q.get("beta2")
        rows.append({
            "x1": p.x1, "x2": p.x2, "y1": p.y1, "y2": p.y2,
            "tau": q["tau"], "normRho2": q["normRho2"], "normR2": q["normR2"],
            "beta1": b1 if isinstance(b1, float) else "",
            "beta2": b2 if isinstance(b2, float) else "",
            "flags": ";".join(flags),
        })
    return rows
