"""Binary field snapshots.

Layout, all little-endian::

    offset  size  content
    0       4     magic b"NLSQ"
    4       4     format version (u32)
    8       4     n (u32)
    12      4     m (u32)
    16      8     L (f64)
    24      8     t (f64)
    32      16*m^n  values as (re f64, im f64), row-major
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import Field, make_grid

MAGIC = b"NLSQ"
VERSION = 1
HEADER = struct.Struct("<4sIIIdd")


class SnapshotError(ValueError):
    pass


def snapshot_size(n: int, m: int) -> int:
    return HEADER.size + 16 * m**n


def snapshot_write(f: Field, t: float, path) -> Path:
    path = Path(path)
    g = f.grid
    header = HEADER.pack(MAGIC, VERSION, g.n, g.m, g.L, float(t))
    data = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(header + data)
    tmp.replace(path)
    return path


def snapshot_read(path) -> tuple[Field, float]:
    blob = Path(path).read_bytes()
    if len(blob) < HEADER.size:
        raise SnapshotError(f"truncated snapshot: {len(blob)} bytes, header needs {HEADER.size}")
    magic, version, n, m, L, t = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SnapshotError(f"magic mismatch: expected {MAGIC!r}, found {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    grid = make_grid(n, m, L)
    expected = snapshot_size(n, m)
    if len(blob) != expected:
        kind = "truncated" if len(blob) < expected else "oversized"
        raise SnapshotError(f"{kind} snapshot: {len(blob)} bytes, expected {expected}")
    vals = np.frombuffer(blob, dtype="<c16", offset=HEADER.size).reshape(grid.shape)
    return Field(grid, vals.astype(complex)), t
