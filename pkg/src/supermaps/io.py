"""Bit-exact JSON file formats for matrices, operations and supermaps.

All numbers are written with 17 significant digits, which round-trips IEEE
doubles exactly.  Schemas:

    MatrixFile    {"rows": r, "cols": c, "data": [[re, im], ...]}   row-major
    OperationFile {"dim_in": d, "dim_out": e, "choi": MatrixFile}
    KrausFile     {"dim_in": d, "dim_out": e, "kraus": [MatrixFile, ...]}
    SupermapFile  {"h_in": ., "h_out": ., "k_in": ., "k_out": .,
                   "kraus": [MatrixFile, ...]}
    Report        {"check": name, "pass": bool, "residual": float,
                   "details": object}
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .supermap import Supermap


class FileFormatError(ValueError):
    """Malformed input file (schema or parse problem, CLI exit code 2)."""


def _render(obj, indent: int) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError("refusing to serialize a non-finite number")
        return format(v, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(
            isinstance(x, (int, float, np.integer, np.floating))
            and not isinstance(x, (bool, np.bool_))
            for x in obj
        ):
            return "[" + ", ".join(_render(x, 0) for x in obj) + "]"
        inner = ",\n".join(pad + "  " + _render(x, indent + 1) for x in obj)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            pad + "  " + json.dumps(str(k)) + ": " + _render(v, indent + 1)
            for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps17(obj) -> str:
    """JSON text with floats at 17 significant digits."""
    return _render(obj, 0)


def _need(cond: bool, msg: str):
    if not cond:
        raise FileFormatError(msg)


def _pos_int(obj, key: str) -> int:
    _need(key in obj, f"missing field '{key}'")
    v = obj[key]
    _need(isinstance(v, int) and not isinstance(v, bool) and v > 0,
          f"field '{key}' must be a positive integer")
    return v


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    _need(m.ndim == 2, "matrix must be two-dimensional")
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(x.real), float(x.imag)] for x in m.reshape(-1)],
    }


def matrix_from_json(obj) -> np.ndarray:
    _need(isinstance(obj, dict), "matrix must be a JSON object")
    rows = _pos_int(obj, "rows")
    cols = _pos_int(obj, "cols")
    _need("data" in obj and isinstance(obj["data"], list), "missing 'data' array")
    data = obj["data"]
    _need(len(data) == rows * cols, f"'data' must hold {rows * cols} entries")
    out = np.empty(rows * cols, dtype=complex)
    for i, pair in enumerate(data):
        _need(
            isinstance(pair, list)
            and len(pair) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair),
            f"entry {i} must be a [re, im] pair",
        )
        _need(
            math.isfinite(pair[0]) and math.isfinite(pair[1]),
            f"entry {i} is not finite",
        )
        out[i] = complex(pair[0], pair[1])
    return out.reshape(rows, cols)


def operation_to_json(dim_in: int, dim_out: int, choi: np.ndarray) -> dict:
    return {"dim_in": dim_in, "dim_out": dim_out, "choi": matrix_to_json(choi)}


def operation_from_json(obj) -> tuple[int, int, np.ndarray]:
    """Schema-level load; Choi validity is a semantic check done by callers."""
    _need(isinstance(obj, dict), "operation must be a JSON object")
    dim_in = _pos_int(obj, "dim_in")
    dim_out = _pos_int(obj, "dim_out")
    _need("choi" in obj, "missing field 'choi'")
    choi = matrix_from_json(obj["choi"])
    d = dim_out * dim_in
    _need(choi.shape == (d, d), f"choi must be {d}x{d}, got {choi.shape}")
    return dim_in, dim_out, choi


def kraus_set_to_json(dim_in: int, dim_out: int, operators) -> dict:
    return {
        "dim_in": dim_in,
        "dim_out": dim_out,
        "kraus": [matrix_to_json(e) for e in operators],
    }


def kraus_set_from_json(obj) -> tuple[int, int, list[np.ndarray]]:
    _need(isinstance(obj, dict), "Kraus file must be a JSON object")
    dim_in = _pos_int(obj, "dim_in")
    dim_out = _pos_int(obj, "dim_out")
    _need("kraus" in obj and isinstance(obj["kraus"], list) and obj["kraus"],
          "missing non-empty 'kraus' array")
    ops = [matrix_from_json(m) for m in obj["kraus"]]
    for e in ops:
        _need(e.shape == (dim_out, dim_in),
              f"Kraus operator must be {dim_out}x{dim_in}, got {e.shape}")
    return dim_in, dim_out, ops


def supermap_to_json(s: Supermap) -> dict:
    return {
        "h_in": s.h_in,
        "h_out": s.h_out,
        "k_in": s.k_in,
        "k_out": s.k_out,
        "kraus": [matrix_to_json(k) for k in s.kraus],
    }


def supermap_from_json(obj) -> Supermap:
    _need(isinstance(obj, dict), "supermap must be a JSON object")
    dims = {k: _pos_int(obj, k) for k in ("h_in", "h_out", "k_in", "k_out")}
    _need("kraus" in obj and isinstance(obj["kraus"], list) and obj["kraus"],
          "missing non-empty 'kraus' array")
    ops = [matrix_from_json(m) for m in obj["kraus"]]
    shape = (dims["k_out"] * dims["k_in"], dims["h_out"] * dims["h_in"])
    for k in ops:
        _need(k.shape == shape, f"Kraus operator must be {shape[0]}x{shape[1]}, got {k.shape}")
    return Supermap(dims["h_in"], dims["h_out"], dims["k_in"], dims["k_out"], tuple(ops))


def load_json(path) -> object:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path} is not valid JSON: {exc}") from exc


def save_json(path, obj):
    Path(path).write_text(dumps17(obj) + "\n", encoding="utf-8")
