"""Deterministic serialization: JSON and CSV with every float at 17
significant digits, plus run provenance."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__


def _fmt(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.17g}"


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{_encode(str(k), indent, level + 1)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def write_columns(path: Path, header: tuple, x, y) -> Path:
    """Two-column CSV plot data."""
    path = Path(path)
    lines = [",".join(header)]
    lines += [f"{float(a):.17g},{float(b):.17g}" for a, b in zip(x, y)]
    path.write_text("\n".join(lines) + "\n")
    return path


def provenance(command: str, config: dict, resolved: dict | None = None) -> dict:
    """Run metadata: the config as given, overlaid with every default the
    command actually used. Private keys (leading underscore) are dropped."""
    merged = {k: v for k, v in config.items() if not str(k).startswith("_")}
    merged.update(resolved or {})
    return {"artifact": "artifact", "version": __version__, "command": command, "config": merged}
