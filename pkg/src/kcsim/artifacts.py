"""Bit-stable CSV / JSON artifact emission.

Numeric CSV content is written with 17 significant digits so reruns with an
identical config and seed reproduce byte-identical files; plotting is
delegated to external tools consuming the CSV.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_map_csv(path, axes: dict, values: np.ndarray, value_name: str):
    """Matrix CSV: first column = axis 0, header row = axis 1 values."""
    names = list(axes)
    if len(names) != 2:
        raise ValueError("map CSV needs exactly two axes")
    a0, a1 = np.asarray(axes[names[0]]), np.asarray(axes[names[1]])
    if values.shape != (len(a0), len(a1)):
        raise ValueError("value array does not match axes")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {value_name} vs ({names[0]}, {names[1]})\n")
        fh.write(",".join([f"{names[0]}\\{names[1]}"] + [fmt(v) for v in a1]) + "\n")
        for i, row in enumerate(values):
            fh.write(",".join([fmt(a0[i])] + [fmt(v) for v in row]) + "\n")


def write_xy_csv(path, x, y, header: tuple[str, str] = ("x", "y")):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{header[0]},{header[1]}\n")
        for xi, yi in zip(x, y):
            fh.write(f"{fmt(xi)},{fmt(yi)}\n")


def read_xy_csv(path) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split(",")[:2]
            try:
                xs.append(float(a))
                ys.append(float(b))
            except ValueError:
                continue  # header row
    if not xs:
        raise ValueError(f"no numeric rows in {path}")
    return np.asarray(xs), np.asarray(ys)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return {"inf": "Infinity", "-inf": "-Infinity"}.get(str(x), x) if math.isinf(x) else x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_json(path, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return str(path)
