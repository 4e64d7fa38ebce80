import struct

import numpy as np
import pytest

from conftest import random_smooth_field
from qnls.grid import make_grid
from qnls.snapshot import HEADER, SnapshotError, snapshot_read, snapshot_size, snapshot_write


def test_round_trip_bit_exact(tmp_path, rng):
    g = make_grid(1, 256, 12.0)
    f = random_smooth_field(g, rng)
    p = snapshot_write(f, 0.375, tmp_path / "a.nlsq")
    back, t = snapshot_read(p)
    assert t == 0.375
    assert back.grid.n == 1 and back.grid.m == 256 and back.grid.L == 12.0
    assert back.values.tobytes() == f.values.tobytes()


def test_round_trip_2d(tmp_path, rng):
    g = make_grid(2, 32, 10.0)
    f = g.field(rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    back, _ = snapshot_read(snapshot_write(f, -1.5, tmp_path / "b.nlsq"))
    assert np.array_equal(back.values, f.values)


def test_layout(tmp_path):
    g = make_grid(1, 64, 8.0)
    p = snapshot_write(g.field(np.arange(64) * (1 + 2j)), 2.0, tmp_path / "c.nlsq")
    blob = p.read_bytes()
    assert HEADER.size == 32
    assert len(blob) == snapshot_size(1, 64) == 32 + 16 * 64
    assert blob[:4] == b"NLSQ"
    assert struct.unpack_from("<III", blob, 4) == (1, 1, 64)
    assert struct.unpack_from("<dd", blob, 16) == (8.0, 2.0)
    assert struct.unpack_from("<dd", blob, 32 + 16 * 3) == (3.0, 6.0)
    assert snapshot_size(2, 32) == 32 + 16 * 1024


def test_bad_magic(tmp_path):
    g = make_grid(1, 16, 4.0)
    p = snapshot_write(g.zeros(), 0.0, tmp_path / "d.nlsq")
    blob = bytearray(p.read_bytes())
    blob[:4] = b"XXXX"
    p.write_bytes(bytes(blob))
    with pytest.raises(SnapshotError, match="magic"):
        snapshot_read(p)


def test_truncated(tmp_path):
    g = make_grid(1, 16, 4.0)
    p = snapshot_write(g.zeros(), 0.0, tmp_path / "e.nlsq")
    blob = p.read_bytes()
    p.write_bytes(blob[:-8])
    with pytest.raises(SnapshotError, match="truncated"):
        snapshot_read(p)
    p.write_bytes(blob[:10])
    with pytest.raises(SnapshotError, match="truncated"):
        snapshot_read(p)


def test_version(tmp_path):
    g = make_grid(1, 16, 4.0)
    p = snapshot_write(g.zeros(), 0.0, tmp_path / "f.nlsq")
    blob = bytearray(p.read_bytes())
    struct.pack_into("<I", blob, 4, 7)
    p.write_bytes(bytes(blob))
    with pytest.raises(SnapshotError, match="version"):
        snapshot_read(p)
