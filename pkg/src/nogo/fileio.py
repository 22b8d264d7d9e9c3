"""JSON encodings shared by the file formats.

Scalars are either exact quadruples ``[a, b, c, d]`` meaning
(a + b sqrt2) + i (c + d sqrt2), with a..d integers or "p/q" strings, or
float entries written as ``{"re": x, "im": y}`` (a bare number is accepted
as a real float).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .operators import Observable, Ray, is_exact_array
from .scalars import Exact


class InputError(ValueError):
    """Malformed input file; ``where`` names the offending field."""

    def __init__(self, message: str, where: str = ""):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(str(exc), str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", str(path)) from exc
    if not isinstance(data, dict):
        raise InputError("top level must be an object", str(path))
    return data


def decode_scalar(x, mode: str, where: str):
    if mode == "exact":
        if not isinstance(x, list):
            raise InputError("exact scalar must be a list [a, b, c, d]", where)
        try:
            return Exact.from_quad(x)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise InputError(str(exc), where) from exc
    if mode == "float":
        if isinstance(x, bool):
            raise InputError("boolean is not a scalar", where)
        if isinstance(x, (int, float)):
            return complex(x)
        if isinstance(x, dict) and set(x) <= {"re", "im"}:
            try:
                return complex(float(x.get("re", 0.0)), float(x.get("im", 0.0)))
            except (TypeError, ValueError) as exc:
                raise InputError(str(exc), where) from exc
        raise InputError("float scalar must be a number or {re, im}", where)
    raise InputError(f"unknown scalar mode {mode!r}", "scalars")


def encode_scalar(x):
    if isinstance(x, Exact):
        return x.to_quad()
    z = complex(x)
    return {"re": z.real, "im": z.imag}


def scalar_mode(data: dict) -> str:
    mode = data.get("scalars", "float")
    if mode not in ("exact", "float"):
        raise InputError(f"must be 'exact' or 'float', got {mode!r}", "scalars")
    return mode


def decode_vector(row, mode: str, where: str) -> np.ndarray:
    if not isinstance(row, list) or not row:
        raise InputError("expected a non-empty list", where)
    vals = [decode_scalar(x, mode, f"{where}[{k}]") for k, x in enumerate(row)]
    return np.array(vals, dtype=object if mode == "exact" else complex)


def decode_matrix(rows, mode: str, where: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise InputError("expected a non-empty list of rows", where)
    m = np.array([decode_vector(r, mode, f"{where}[{i}]") for i, r in enumerate(rows)], dtype=object if mode == "exact" else complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"matrix must be square, got shape {m.shape}", where)
    if dim is not None and m.shape[0] != dim:
        raise InputError(f"matrix is {m.shape[0]}x{m.shape[0]}, expected {dim}x{dim}", where)
    return m


def encode_matrix(m: np.ndarray) -> list:
    return [[encode_scalar(x) for x in row] for row in m]


def encode_vector(v: np.ndarray) -> list:
    return [encode_scalar(x) for x in v]


def require(data: dict, key: str, kind, where: str = ""):
    if key not in data:
        raise InputError("missing field", f"{where}{key}")
    val = data[key]
    if not isinstance(val, kind) or isinstance(val, bool):
        raise InputError(f"expected {getattr(kind, '__name__', kind)}", f"{where}{key}")
    return val


# -- observable-set files ---------------------------------------------------


def load_observables(path) -> tuple[list[Observable], dict]:
    return parse_observables(load_json(path))


def parse_observables(data: dict) -> tuple[list[Observable], dict]:
    dim = require(data, "dim", int)
    if dim < 1:
        raise InputError("must be positive", "dim")
    mode = scalar_mode(data)
    ops = []
    for k, rows in enumerate(require(data, "operators", list)):
        where = f"operators[{k}]"
        m = decode_matrix(rows, mode, where, dim)
        try:
            ops.append(Observable(m))
        except ValueError as exc:
            raise InputError(str(exc), where) from exc
    return ops, data


def dump_observables(ops: list[Observable], **extra) -> dict:
    exact = all(op.exact for op in ops)
    out = {
        "dim": ops[0].dim if ops else 0,
        "scalars": "exact" if exact else "float",
        "operators": [encode_matrix(op.matrix if exact else op.numeric) for op in ops],
    }
    out.update(extra)
    return out


def encode_ray(r: Ray, exact: bool) -> list:
    return encode_vector(r.coords if exact and is_exact_array(r.coords) else r.numeric)
