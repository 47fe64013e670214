"""File formats: CSV tables, binary complex fields and the JSON manifest."""
from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

FIELD_MAGIC = b"FDRT"
FIELD_VERSION = 1
# magic, version, ndim, dims[3], h, theta
_HEADER = struct.Struct("<4sII3Qdd")
MANIFEST_SCHEMA = "fracdfrt-manifest/1"


def _fmt(v) -> str:
    return "%.17g" % v


def write_csv(path, columns: dict[str, np.ndarray]) -> Path:
    """Write equal-length real columns with a header row, 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float).ravel() for k in names]
    if len({len(c) for c in data}) > 1:
        raise ValueError("CSV columns differ in length")
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as f:
        r = csv.reader(f)
        names = next(r)
        rows = np.array([[float(v) for v in row] for row in r])
    rows = rows.reshape(-1, len(names))
    return {k: rows[:, i] for i, k in enumerate(names)}


def write_complex_csv(path, x: np.ndarray, values: np.ndarray) -> Path:
    values = np.asarray(values, dtype=complex)
    return write_csv(path, {"x": x, "re": values.real, "im": values.imag})


def write_field(path, values: np.ndarray, h: float, theta: float) -> Path:
    """Little-endian binary dump: header then interleaved (Re, Im) float64."""
    values = np.asarray(values, dtype=complex)
    if values.ndim > 3:
        raise ValueError("at most 3 dimensions")
    dims = list(values.shape) + [0] * (3 - values.ndim)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    inter = np.empty(values.size * 2, dtype="<f8")
    flat = values.ravel()
    inter[0::2], inter[1::2] = flat.real, flat.imag
    with open(path, "wb") as f:
        f.write(_HEADER.pack(FIELD_MAGIC, FIELD_VERSION, values.ndim, *dims, float(h), float(theta)))
        f.write(inter.tobytes())
    return path


def read_field(path):
    """Returns (values, h, theta)."""
    raw = Path(path).read_bytes()
    magic, version, ndim, d0, d1, d2, h, theta = _HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC or version != FIELD_VERSION:
        raise ValueError(f"{path}: not a version-{FIELD_VERSION} field file")
    shape = (d0, d1, d2)[:ndim]
    inter = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    expected = 2 * int(np.prod(shape))
    if inter.size != expected:
        raise ValueError(f"{path}: payload has {inter.size} doubles, header implies {expected}")
    return (inter[0::2] + 1j * inter[1::2]).reshape(shape), h, theta


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _jsonable(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.complexfloating):
        return _jsonable(complex(v))
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not np.isfinite(v):
        return str(v)
    return v


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path
