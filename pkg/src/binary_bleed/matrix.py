"""DenseMatrix storage: the BBMX binary layout and CSV interchange.

BBMX layout: 4 magic bytes ``b"BBMX"``, little-endian u32 rows, u32 cols,
then rows*cols little-endian float64 values in row-major order.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .search import InvalidInput

MAGIC = b"BBMX"
_HEADER = struct.Struct("<4sII")


def as_matrix(data, nonnegative: bool = False) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInput(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("matrix has non-finite entries")
    if nonnegative and np.any(arr < 0):
        raise InvalidInput("matrix has negative entries")
    return arr


def to_bbmx_bytes(data) -> bytes:
    arr = as_matrix(data)
    rows, cols = arr.shape
    return _HEADER.pack(MAGIC, rows, cols) + arr.astype("<f8").tobytes(order="C")


def from_bbmx_bytes(buf: bytes) -> np.ndarray:
    if len(buf) < _HEADER.size:
        raise InvalidInput("truncated BBMX header")
    magic, rows, cols = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise InvalidInput(f"bad magic {magic!r}")
    expected = _HEADER.size + 8 * rows * cols
    if len(buf) != expected:
        raise InvalidInput(f"BBMX payload is {len(buf)} bytes, expected {expected}")
    arr = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    return arr.astype(np.float64)


def write_bbmx(path, data) -> None:
    Path(path).write_bytes(to_bbmx_bytes(data))


def read_bbmx(path) -> np.ndarray:
    return from_bbmx_bytes(Path(path).read_bytes())


def write_csv(path, data) -> None:
    # %.17g round-trips float64 exactly
    np.savetxt(path, as_matrix(data), delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    return as_matrix(np.loadtxt(path, delimiter=",", ndmin=2))


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    return read_bbmx(path) if head == MAGIC else read_csv(path)
