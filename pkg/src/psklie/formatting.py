"""Deterministic number and form rendering for reports."""
from __future__ import annotations

import json
from typing import Any

import numpy as np

SCHEMA = "psk-report/1"


def fmt(x: float) -> str:
    """12 significant digits, negative zero printed as 0."""
    x = float(x)
    s = f"{x:.12g}"
    return "0" if s in ("-0", "0") else s


def fmt_complex(z: complex) -> str:
    z = complex(z)
    re, im = fmt(z.real), fmt(z.imag)
    if im == "0":
        return re
    if re == "0":
        return f"{im}i"
    sign = "+" if not im.startswith("-") else "-"
    return f"({re}{sign}{im.lstrip('-')}i)"


def linear(coeffs, names, tol: float = 1e-12) -> str:
    """Render sum coeffs[k] * names[k], dropping negligible terms."""
    parts = []
    for c, name in zip(coeffs, names):
        c = complex(c)
        if abs(c) <= tol:
            continue
        s = fmt_complex(c)
        if s == "1":
            term = name
        elif s == "-1":
            term = f"-{name}"
        else:
            term = f"{s}*{name}"
        parts.append(term)
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


def plain(obj: Any) -> Any:
    """Convert to JSON-safe values with fixed float formatting."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj)) if np.isfinite(obj) else fmt(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": plain(obj.real), "im": plain(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def document(kind: str, body: dict) -> str:
    return json.dumps({"schema": SCHEMA, "kind": kind, **plain(body)}, indent=2)
