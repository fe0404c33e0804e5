"""JSON/CSV helpers for reports."""

from __future__ import annotations

import itertools
import json
import math

import numpy as np


def tensor_entries(arr, prefix: str, tol: float = 0.0) -> dict[str, float]:
    """Components keyed by 1-based multi-index, e.g. ``R_1212``."""
    arr = np.asarray(arr)
    out = {}
    for idx in itertools.product(*(range(n) for n in arr.shape)):
        v = float(arr[idx])
        if abs(v) > tol or tol == 0.0:
            out[prefix + "".join(str(i + 1) for i in idx)] = v
    return out


def _default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _clean(o):
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indentation."""
    return json.dumps(_clean(json.loads(json.dumps(obj, default=_default))), indent=2, sort_keys=True)
