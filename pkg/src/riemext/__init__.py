"""Curvature of modified Riemannian extensions of affine surfaces."""

from .catalog import catalog_list, catalog_run
from .config import ConfigError, ScenarioConfig, load, loads
from .curvature import BACH_SIGN, CONVENTIONS, RICCI_SIGN, curvature_pack
from .expr import ParseError, Point4, parse_expr
from .extension import (DeformationField, EndoField, NilpotentSpec, build_metric, canonical_endo,
                        mirrored_endo)
from .scenario import run_scenario
from .surface import explicit_surface, remark12_surface, type_a, type_b

__version__ = "0.1.0"

__all__ = [
    "BACH_SIGN", "CONVENTIONS", "ConfigError", "DeformationField", "EndoField", "NilpotentSpec",
    "ParseError", "Point4", "RICCI_SIGN", "ScenarioConfig", "build_metric", "canonical_endo",
    "catalog_list", "catalog_run", "curvature_pack", "explicit_surface", "load", "loads",
    "mirrored_endo", "parse_expr", "remark12_surface", "run_scenario", "type_a", "type_b",
]
