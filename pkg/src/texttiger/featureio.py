"""Serialized feature files: the TFV1 binary format plus its JSON sidecar.

Layout: magic bytes ``TFV1``, u32 little-endian row count, u32 column count,
then row-major 32-bit little-endian floats. The sidecar (same path with
``.json`` appended) records what the rows are: ``label_dist``,
``pool_features``, ``clip_img``, or ``clip_txt``, plus source/model/created
provenance.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError

MAGIC = b"TFV1"
_HEADER = struct.Struct("<4sII")

FEATURE_KINDS = ("label_dist", "pool_features", "clip_img", "clip_txt")


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_features(path, array, kind=None, source=None, model=None, created=None) -> Path:
    """Write an N x d float matrix as TFV1 plus a JSON sidecar.

    Values are stored as float32 regardless of input dtype. Returns the
    feature file path.
    """
    x = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {x.shape}")
    if kind is not None and kind not in FEATURE_KINDS:
        raise ValueError(f"unknown feature kind {kind!r}; expected one of {FEATURE_KINDS}")
    path = Path(path)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, x.shape[0], x.shape[1]))
        f.write(x.tobytes())
    sidecar = {"kind": kind, "source": source, "model": model, "created": created}
    with open(sidecar_path(path), "w", encoding="utf-8") as f:
        json.dump(sidecar, f, sort_keys=True, indent=2)
        f.write("\n")
    return path


def read_features(path, with_sidecar: bool = False):
    """Read a TFV1 file back as a float32 N x d array.

    With ``with_sidecar=True`` returns ``(array, sidecar_dict_or_None)``.
    Raises ParseError on bad magic or a truncated payload.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ParseError(f"{path}: file shorter than the TFV1 header")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + rows * cols * 4
    if len(raw) != expected:
        raise ParseError(
            f"{path}: payload is {len(raw)} bytes, expected {expected} for {rows}x{cols}"
        )
    array = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(rows, cols).copy()
    if not with_sidecar:
        return array
    sc = sidecar_path(path)
    sidecar = None
    if sc.exists():
        with open(sc, encoding="utf-8") as f:
            sidecar = json.load(f)
    return array, sidecar
