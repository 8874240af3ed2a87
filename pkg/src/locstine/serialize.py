"""Canonical JSON encoding.

Complex numbers are ``[re, im]`` pairs; matrices are nested row-major lists
of such pairs.  Floats are written with 17 significant digits so that a
reload is bit-exact, and dict order is preserved, so identical objects
always produce identical bytes.  NaN and infinities are rejected.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidSpecError


def complex_to_json(arr):
    arr = np.asarray(arr, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise InvalidSpecError("non-finite value cannot be serialized")
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def complex_from_json(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape and arr.shape[-1] != 2:
        raise InvalidSpecError("complex entries must be [re, im] pairs")
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidSpecError("non-finite value in input")
    if arr.size == 0:
        return np.zeros(arr.shape[:-1] if arr.ndim > 1 else (0,), dtype=complex)
    return arr[..., 0] + 1j * arr[..., 1]


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise InvalidSpecError("non-finite value cannot be serialized")
    if x == 0.0:
        return "0.0"
    s = "%.17g" % x
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, val) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _encode(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, val in enumerate(obj):
            if i:
                out.append(", ")
            _encode(val, out)
        out.append("]")
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), out)
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    out: list[str] = []
    _encode(obj, out)
    return "".join(out) + "\n"


def dump(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def load(path):
    def _reject(token):
        raise InvalidSpecError(f"non-finite literal {token} in {path}")

    with open(path, encoding="utf-8") as fh:
        return json.load(fh, parse_constant=_reject)
