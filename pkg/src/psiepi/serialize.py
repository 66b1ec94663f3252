"""Canonical JSON/CSV output and state/setting (de)serialization.

Reports must be byte-identical across runs, so JSON is written by hand:
sorted keys, two-space indent, floats with 17 significant digits.
"""
from __future__ import annotations

import hashlib
import json
import math

import numpy as np


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0.0:
        return "0.0"
    s = f"{x:.17g}"
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def _dump(obj, indent: int, level: int, out: list[str]) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        for i, (k, v) in enumerate(items):
            out.append(f"{pad}{json.dumps(str(k))}: ")
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad)
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj, indent: int = 2) -> str:
    out: list[str] = []
    _dump(obj, indent, 0, out)
    return "".join(out) + "\n"


def digest(obj) -> str:
    """sha256 of the compact canonical form of ``obj``."""
    return hashlib.sha256(canonical_json(obj, indent=0).encode()).hexdigest()


def state_from_json(pairs) -> np.ndarray:
    if not isinstance(pairs, list) or len(pairs) != 4:
        raise ValueError("state must be a list of 4 [re, im] pairs")
    amps = []
    for p in pairs:
        if not isinstance(p, list) or len(p) != 2 or not all(isinstance(c, (int, float)) for c in p):
            raise ValueError(f"bad amplitude {p!r}; expected [re, im]")
        amps.append(complex(p[0], p[1]))
    return np.array(amps)


def state_to_json(v) -> list[list[float]]:
    return [[float(c.real), float(c.imag)] for c in np.asarray(v, dtype=complex)]


def setting_from_json(vec) -> np.ndarray:
    if not isinstance(vec, list) or len(vec) != 3 or not all(isinstance(c, (int, float)) for c in vec):
        raise ValueError(f"setting must be a list of 3 reals, got {vec!r}")
    return np.array(vec, dtype=float)


def rows_to_csv(header, rows) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(format_float(v) if isinstance(v, (float, np.floating)) else str(v) for v in r))
    return "\n".join(lines) + "\n"
