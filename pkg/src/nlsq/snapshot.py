"""NLSQ binary field snapshots.

Layout (all little-endian):
    b"NLSQ" | u32 version | u8 geometry tag | u8 axis count
    | per axis: f64 L, u32 m | u samples | v samples
Each sample is (f64 real, f64 imag), row-major in axis order.

Geometry tag: low nibble 0 cartesian, 1 cylindrical, 2 radial; high nibble
the radial dimension d (0 for cartesian).  Axis names are not stored: a radial
axis is always called "r" and periodic axes x1, x2, ...
"""
from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .grid import FieldPair, make_grid

MAGIC = b"NLSQ"
VERSION = 1
_GEOM = {"cartesian": 0, "cylindrical": 1, "radial": 2}
_GEOM_INV = {v: k for k, v in _GEOM.items()}


class SnapshotError(ValueError):
    pass


def encode(pair: FieldPair) -> bytes:
    g = pair.grid
    rdim = g.rdim if g.geometry != "cartesian" else 0
    if not 0 <= rdim < 16:
        raise SnapshotError("radial dimension does not fit the tag nibble")
    head = [MAGIC, struct.pack("<IBB", VERSION, _GEOM[g.geometry] | (rdim << 4), g.ndim)]
    for ax in g.axes:
        head.append(struct.pack("<dI", float(ax.L), int(ax.m)))
    body = []
    for f in (pair.u, pair.v):
        a = np.ascontiguousarray(np.asarray(f, dtype=np.complex128))
        body.append(a.astype("<c16").tobytes(order="C"))
    return b"".join(head + body)


def decode(data: bytes) -> FieldPair:
    if data[:4] != MAGIC:
        raise SnapshotError("bad magic bytes")
    if len(data) < 10:
        raise SnapshotError("truncated header")
    version, tag, naxes = struct.unpack_from("<IBB", data, 4)
    if version != VERSION:
        raise SnapshotError(f"unsupported version {version}")
    code, rdim = tag & 0x0F, tag >> 4
    if code not in _GEOM_INV:
        raise SnapshotError(f"unknown geometry code {code}")
    geometry = _GEOM_INV[code]
    off = 10
    axes = []
    for i in range(naxes):
        if len(data) < off + 12:
            raise SnapshotError("truncated axis table")
        L, m = struct.unpack_from("<dI", data, off)
        off += 12
        radial = geometry == "radial" or (geometry == "cylindrical" and i == 0)
        axes.append(("r" if radial else f"x{i + 1}", L, m))
    shape = tuple(a[2] for a in axes)
    count = int(np.prod(shape))
    need = off + 2 * 16 * count
    if len(data) != need:
        raise SnapshotError(f"payload size {len(data)} does not match header ({need})")
    u = np.frombuffer(data, dtype="<c16", count=count, offset=off).reshape(shape).astype(complex)
    v = np.frombuffer(data, dtype="<c16", count=count, offset=off + 16 * count).reshape(shape).astype(complex)
    grid = make_grid(geometry, axes, rdim=rdim or None)
    return FieldPair(u, v, grid)


def atomic_write(path, data, mode="wb"):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(path, pair: FieldPair):
    atomic_write(path, encode(pair))


def load(path) -> FieldPair:
    with open(path, "rb") as fh:
        return decode(fh.read())
