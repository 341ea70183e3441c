"""Deterministic spatial resampling helpers (area-average down, linear up)."""
from __future__ import annotations

import numpy as np
from PIL import Image

from ..errors import DataError


def area_downsample(img: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Area-averaged resize of the trailing two axes of a [..., H, W] array."""
    h2, w2 = target
    *lead, h, w = img.shape
    if h2 < 1 or w2 < 1:
        raise DataError(f"bad target size {target}")
    if h == h2 and w == w2:
        return img.astype(np.float32, copy=True)
    if h % h2 == 0 and w % w2 == 0:
        fh, fw = h // h2, w // w2
        out = img.reshape(*lead, h2, fh, w2, fw).mean(axis=(-3, -1))
        return out.astype(np.float32)
    flat = img.reshape(-1, h, w).astype(np.float32)
    out = np.empty((flat.shape[0], h2, w2), dtype=np.float32)
    for i in range(flat.shape[0]):
        out[i] = np.asarray(
            Image.fromarray(flat[i], mode="F").resize((w2, h2), Image.Resampling.BOX))
    return out.reshape(*lead, h2, w2)


def _linear_axis(arr: np.ndarray, axis: int, new_len: int) -> np.ndarray:
    """Linear interpolation along one axis, half-pixel-centre alignment."""
    n = arr.shape[axis]
    if n == new_len:
        return arr
    src = (np.arange(new_len) + 0.5) * (n / new_len) - 0.5
    src = np.clip(src, 0, n - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n - 1)
    frac = (src - lo).astype(arr.dtype)
    a = np.take(arr, lo, axis=axis)
    b = np.take(arr, hi, axis=axis)
    shape = [1] * arr.ndim
    shape[axis] = new_len
    frac = frac.reshape(shape)
    return a * (1 - frac) + b * frac


def trilinear_resize(vol: np.ndarray, target: tuple[int, int, int]) -> np.ndarray:
    """Separable trilinear resize of a [T,H,W] volume."""
    if vol.ndim != 3:
        raise DataError(f"expected [T,H,W] volume, got shape {vol.shape}")
    out = vol.astype(np.float32)
    for axis, new_len in enumerate(target):
        out = _linear_axis(out, axis, new_len)
    return out
