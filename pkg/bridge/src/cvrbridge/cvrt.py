"""CVRT tensor files, written to the published interchange format.

Little-endian: magic "CVRT" | u16 version=1 | u8 dtype=1 (float32) |
u8 ndim | ndim x u32 dims | row-major float32 payload.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"CVRT"
VERSION = 1
DTYPE_F32 = 1


class CvrtFormatError(ValueError):
    pass


def write_cvrt(path, tensor: np.ndarray) -> None:
    path = Path(path)
    arr = np.ascontiguousarray(tensor, dtype="<f4")
    if not 1 <= arr.ndim <= 255 or any(d < 1 for d in arr.shape):
        raise CvrtFormatError(f"bad tensor shape {arr.shape}")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name)
    with os.fdopen(fd, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HBB", VERSION, DTYPE_F32, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(arr.tobytes())
    os.replace(tmp, path)


def read_cvrt(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise CvrtFormatError(f"{path}: bad magic {data[:4]!r}")
    version, dtype, ndim = struct.unpack("<HBB", data[4:8])
    if version != VERSION or dtype != DTYPE_F32:
        raise CvrtFormatError(f"{path}: unsupported version/dtype")
    dims = struct.unpack(f"<{ndim}I", data[8:8 + 4 * ndim])
    payload = data[8 + 4 * ndim:]
    expected = 4 * int(np.prod(dims))
    if len(payload) != expected:
        raise CvrtFormatError(
            f"{path}: payload {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
