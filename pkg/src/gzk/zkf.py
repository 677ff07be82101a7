"""The ZKF1 snapshot format.

Layout: the 4-byte magic ``ZKF1``, a little-endian ``uint32`` header
length, a UTF-8 JSON header ``{"version": 1, "n", "box", "k", "time"}`` and
then ``n*n`` little-endian float64 samples in row-major order.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .grid import Field, GridSpec

MAGIC = b"ZKF1"
VERSION = 1


class FormatError(ValueError):
    pass


def dumps(f: Field, k: int | None = None, time: float = 0.0) -> bytes:
    header = {"version": VERSION, "n": f.spec.n, "box": f.spec.L, "k": k, "time": float(time)}
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    body = np.ascontiguousarray(f.samples, dtype="<f8").tobytes()
    return MAGIC + struct.pack("<I", len(raw)) + raw + body


def loads(data: bytes) -> tuple[Field, dict]:
    """Parse ZKF1 bytes into ``(field, header)``."""
    if data[:4] != MAGIC:
        raise FormatError("not a ZKF1 file (bad magic)")
    if len(data) < 8:
        raise FormatError("truncated ZKF1 header")
    (hlen,) = struct.unpack("<I", data[4:8])
    try:
        header = json.loads(data[8 : 8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad ZKF1 header: {exc}") from exc
    if header.get("version") != VERSION:
        raise FormatError(f"unsupported ZKF1 version {header.get('version')!r}")
    n = int(header["n"])
    body = data[8 + hlen :]
    if len(body) != 8 * n * n:
        raise FormatError(f"expected {8 * n * n} payload bytes, found {len(body)}")
    samples = np.frombuffer(body, dtype="<f8").reshape(n, n)
    return Field(GridSpec(n, float(header["box"])), samples), header


def write(path, f: Field, k: int | None = None, time: float = 0.0) -> Path:
    """Write atomically (temp file then rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps(f, k, time))
    os.replace(tmp, path)
    return path


def read(path) -> tuple[Field, dict]:
    return loads(Path(path).read_bytes())
