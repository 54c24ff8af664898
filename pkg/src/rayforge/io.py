"""Text formats: ray CSV, JSON documents and ``re,im`` flag values.

CSV numbers use ``%.17g`` and JSON floats use Python's shortest round-trip
repr, so parsing a file and writing it again reproduces it byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence

import numpy as np

from .core import PeriodicPointRecord
from .rays import LEG, RAY, Curve

CSV_HEADER = "t,re,im"


def format_float(x: float) -> str:
    return "%.17g" % x


def parse_complex(text: str) -> complex:
    """``"re,im"`` (or a single real) to a complex number."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) == 1 and parts[0]:
        vals = [float(parts[0]), 0.0]
    elif len(parts) == 2 and all(parts):
        vals = [float(parts[0]), float(parts[1])]
    else:
        raise ValueError(f"expected 're,im', got {text!r}")
    if not all(math.isfinite(v) for v in vals):
        raise ValueError(f"non-finite number in {text!r}")
    return complex(vals[0], vals[1])


def format_complex(z: complex) -> str:
    return f"{format_float(z.real)},{format_float(z.imag)}"


def parse_box(text: str) -> tuple[float, float, float, float]:
    vals = [float(p) for p in str(text).split(",")]
    if len(vals) != 4 or not all(math.isfinite(v) for v in vals):
        raise ValueError(f"expected 're0,re1,im0,im1', got {text!r}")
    re0, re1, im0, im1 = vals
    if not (re0 < re1 and im0 < im1):
        raise ValueError("box must satisfy re0 < re1 and im0 < im1")
    return re0, re1, im0, im1


def curve_to_csv(curve: Curve) -> str:
    lines = [CSV_HEADER]
    for t, z in zip(curve.t, curve.z):
        lines.append(f"{format_float(t)},{format_float(z.real)},{format_float(z.imag)}")
    return "\n".join(lines) + "\n"


def curve_from_csv(text: str, kind: str = RAY) -> Curve:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or [c.strip() for c in rows[0]] != CSV_HEADER.split(","):
        raise ValueError(f"missing '{CSV_HEADER}' header")
    ts, zs = [], []
    for row in rows[1:]:
        if not row:
            continue
        if len(row) != 3:
            raise ValueError(f"bad CSV row {row!r}")
        t, re, im = (float(c) for c in row)
        if not all(math.isfinite(v) for v in (t, re, im)):
            raise ValueError(f"non-finite CSV row {row!r}")
        ts.append(t)
        zs.append(complex(re, im))
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t must be strictly increasing")
    return Curve(kind, np.array(ts), np.array(zs, dtype=complex), anchor=zs[0] if zs else None)


def leg_from_csv(text: str) -> Curve:
    return curve_from_csv(text, kind=LEG)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def load_json(text: str):
    return json.loads(text)


def periodic_points_to_json(records: Iterable[PeriodicPointRecord]) -> str:
    return dump_json([r.to_json() for r in records])


def periodic_points_from_json(text: str) -> list[PeriodicPointRecord]:
    data = load_json(text)
    if isinstance(data, dict):
        data = [data]
    return [PeriodicPointRecord.from_json(d) for d in data]
