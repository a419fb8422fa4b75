"""JSON encoding of matrices, states, bases, POVMs and reports.

Complex entries are ``[re, im]`` pairs and matrices are row-major nested
lists. Python's float repr round-trips exactly, so serialized objects parse
back bit-for-bit.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import UncertError
from .states import BasisSet, Povm, QState


class InputError(UncertError):
    """Malformed or unreadable input file."""


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"matrix entries must be [re, im] pairs: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InputError(f"expected an n x m x 2 array, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_json(state: QState) -> dict:
    return {"type": "state", "dims": list(state.dims), "labels": list(state.labels),
            "matrix": matrix_to_json(state.matrix)}


def basis_to_json(basis: BasisSet) -> dict:
    return {"type": "basis", "name": basis.name, "kets": matrix_to_json(basis.kets)}


def povm_to_json(povm: Povm) -> dict:
    return {"type": "povm", "elements": [matrix_to_json(e) for e in povm.elements]}


def to_json_obj(obj) -> dict:
    if isinstance(obj, QState):
        return state_to_json(obj)
    if isinstance(obj, BasisSet):
        return basis_to_json(obj)
    if isinstance(obj, Povm):
        return povm_to_json(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_json_obj(data: dict):
    """Parse a state, basis, POVM or projector object."""
    if not isinstance(data, dict) or "type" not in data:
        raise InputError("expected an object with a 'type' field")
    kind = data["type"]
    try:
        if kind == "state":
            m = matrix_from_json(data["matrix"])
            return QState(m, tuple(data["dims"]), tuple(data.get("labels", ())))
        if kind == "basis":
            return BasisSet(matrix_from_json(data["kets"]), data.get("name", ""))
        if kind == "povm":
            return Povm(tuple(matrix_from_json(e) for e in data["elements"]))
        if kind == "projector":
            return matrix_from_json(data["matrix"])
    except KeyError as exc:
        raise InputError(f"{kind} object lacks field {exc}") from exc
    raise InputError(f"unknown object type {kind!r}")


def read_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def load(path):
    """Load one object, or a list of objects, from a JSON file."""
    data = read_json(path)
    if isinstance(data, list):
        return [from_json_obj(item) for item in data]
    return from_json_obj(data)


def sanitize(obj):
    """Make ``obj`` strict-JSON safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isfinite(f):
            return f
        return "inf" if f > 0 else ("-inf" if f < 0 else "nan")
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(sanitize(obj), indent=2, allow_nan=False) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
