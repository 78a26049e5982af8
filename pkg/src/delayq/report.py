"""Deterministic CSV, JSON and gnuplot writers.

Floats are written with 17 significant digits so that every value
round-trips exactly and repeated runs produce byte-identical files.
"""

from __future__ import annotations

import io
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

__all__ = ["fmt_float", "to_json", "to_csv", "to_dat", "write_text", "output_schema"]


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def _encode(obj: Any, indent: int, level: int, out: list[str]) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(key))}: ")
            _encode(value, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(items):
            out.append(pad)
            _encode(value, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__} as JSON")


def to_json(obj: Any, indent: int = 2) -> str:
    out: list[str] = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def _cell(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    if v is None:
        return ""
    return str(v)


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def to_dat(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Whitespace-separated columns with a ``#`` header line, as gnuplot reads them."""
    buf = io.StringIO()
    buf.write("# " + " ".join(header) + "\n")
    for row in rows:
        buf.write(" ".join(_cell(v) if _cell(v) else "NaN" for v in row) + "\n")
    return buf.getvalue()


def write_text(text: str, path: str | Path | None) -> None:
    if path is None:
        import sys

        sys.stdout.write(text)
        return
    Path(path).write_text(text)


def output_schema() -> dict:
    return json.loads(resources.files("delayq").joinpath("schemas/output.schema.json").read_text())
