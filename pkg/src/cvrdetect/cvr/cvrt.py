"""CVRT binary tensor interchange (little-endian throughout).

Layout: magic "CVRT" | u16 version=1 | u8 dtype=1 (float32) | u8 ndim |
ndim x u32 dims | row-major float32 payload. No padding, no footer.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..errors import FormatError

MAGIC = b"CVRT"
VERSION = 1
DTYPE_F32 = 1


class CvrtBadMagic(FormatError):
    pass


class CvrtUnsupportedVersion(FormatError):
    pass


class CvrtUnsupportedDtype(FormatError):
    pass


class CvrtTruncatedPayload(FormatError):
    pass


class CvrtTrailingData(FormatError):
    pass


def write_cvrt(path, tensor: np.ndarray) -> None:
    """Atomic write (temp file + rename) of a float32 tensor."""
    path = Path(path)
    arr = np.ascontiguousarray(tensor, dtype="<f4")
    if arr.ndim < 1 or arr.ndim > 255:
        raise FormatError(f"ndim {arr.ndim} outside CVRT range [1, 255]")
    if any(d < 1 for d in arr.shape):
        raise FormatError(f"CVRT dims must be positive, got {arr.shape}")
    header = MAGIC + struct.pack("<HBB", VERSION, DTYPE_F32, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(header)
            f.write(arr.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_cvrt(path) -> np.ndarray:
    """Strictly-validated read; distinct errors per failure mode."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 8:
        raise CvrtTruncatedPayload(f"{path}: file shorter than CVRT header")
    if data[:4] != MAGIC:
        raise CvrtBadMagic(f"{path}: bad magic {data[:4]!r}")
    version, dtype, ndim = struct.unpack("<HBB", data[4:8])
    if version != VERSION:
        raise CvrtUnsupportedVersion(f"{path}: unsupported version {version}")
    if dtype != DTYPE_F32:
        raise CvrtUnsupportedDtype(f"{path}: unsupported dtype code {dtype}")
    dims_end = 8 + 4 * ndim
    if len(data) < dims_end:
        raise CvrtTruncatedPayload(f"{path}: header truncated in dims")
    dims = struct.unpack(f"<{ndim}I", data[8:dims_end])
    if any(d < 1 for d in dims):
        raise FormatError(f"{path}: non-positive dim in {dims}")
    expected = 4 * int(np.prod(dims))
    payload = data[dims_end:]
    if len(payload) < expected:
        raise CvrtTruncatedPayload(
            f"{path}: truncated payload, expected {expected} bytes, got {len(payload)}")
    if len(payload) > expected:
        raise CvrtTrailingData(
            f"{path}: {len(payload) - expected} trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
