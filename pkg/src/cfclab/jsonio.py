"""Deterministic report serialization: JSON/CSV with 17-significant-digit
floats, human tables with 6."""
from __future__ import annotations

import math
from typing import Any

JSON_SIG = 17
TABLE_SIG = 6


def format_float(x: float, sig: int = JSON_SIG) -> str:
    if not math.isfinite(x):
        return "null"
    s = f"{x:.{sig}g}"
    # json numbers may not start with a bare dot or use 'inf'/'nan'
    return s


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON serializer emitting floats at full 17-digit precision."""
    lines: list[str] = []

    def emit(o: Any, depth: int) -> str:
        pad = " " * (indent * depth)
        pad_in = " " * (indent * (depth + 1))
        if o is None:
            return "null"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return format_float(o)
        if isinstance(o, str):
            return _escape(o)
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            items = [emit(v, depth + 1) for v in o]
            return "[\n" + ",\n".join(pad_in + it for it in items) + "\n" + pad + "]"
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [
                f"{_escape(str(k))}: {emit(v, depth + 1)}" for k, v in o.items()
            ]
            return "{\n" + ",\n".join(pad_in + it for it in items) + "\n" + pad + "}"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return emit(obj, 0) + "\n"


def _escape(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    """Flatten nested dicts/lists to dotted key/value rows for CSV output."""
    rows: list[tuple[str, Any]] = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            rows.extend(flatten(v, f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            rows.extend(flatten(v, f"{prefix}[{i}]"))
    else:
        rows.append((prefix, obj))
    return rows


def to_csv(obj: Any) -> str:
    lines = ["key,value"]
    for key, value in flatten(obj):
        if isinstance(value, float):
            lines.append(f"{key},{format_float(value)}")
        elif isinstance(value, bool):
            lines.append(f"{key},{str(value).lower()}")
        else:
            lines.append(f"{key},{value}")
    return "\n".join(lines) + "\n"


def to_table(obj: Any) -> str:
    rows = flatten(obj)
    width = max((len(k) for k, _ in rows), default=0)
    lines = []
    for key, value in rows:
        if isinstance(value, float):
            value = format_float(value, TABLE_SIG)
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key:<{width}}  {value}")
    return "\n".join(lines) + "\n"
