"""Vectorized RGB<->HSV for hue manipulation during rendering."""
from __future__ import annotations

import numpy as np


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """[..., 3] floats in [0,1] -> HSV with hue in turns [0,1)."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = np.max(rgb, axis=-1)
    minc = np.min(rgb, axis=-1)
    v = maxc
    span = maxc - minc
    s = np.where(maxc > 0, span / np.where(maxc > 0, maxc, 1), 0.0)
    safe = np.where(span > 0, span, 1.0)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(maxc == r, bc - gc,
                 np.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(span > 0, (h / 6.0) % 1.0, 0.0)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(int) % 6
    out = np.empty(hsv.shape, dtype=hsv.dtype)
    for idx, (rr, gg, bb) in enumerate(
            [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)]):
        m = i == idx
        out[..., 0] = np.where(m, rr, out[..., 0]) if idx else np.where(m, rr, 0)
        out[..., 1] = np.where(m, gg, out[..., 1]) if idx else np.where(m, gg, 0)
        out[..., 2] = np.where(m, bb, out[..., 2]) if idx else np.where(m, bb, 0)
    return out


def shift_hue(rgb: np.ndarray, turns) -> np.ndarray:
    """Rotate hue by `turns` (scalar or broadcastable array, in [0,1))."""
    hsv = rgb_to_hsv(rgb)
    hsv[..., 0] = (hsv[..., 0] + turns) % 1.0
    return hsv_to_rgb(hsv)
