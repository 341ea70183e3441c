"""Built-in appearance proxy: per-frame grid statistics.

Six channels per grid cell: mean R, mean G, mean B, intensity std, mean
horizontal and vertical gradient magnitude. External feature volumes (any
[C,24,H,W]) enter through CVRT files instead; nothing here assumes C == 6
downstream.
"""
from __future__ import annotations

import numpy as np

from ..errors import DataError
from .frames import FrameSequence
from .volume import CLIP_TIME, ModalityVolume

APPEARANCE_CHANNELS = 6


def _cell_reduce(img: np.ndarray, row_edges, col_edges) -> np.ndarray:
    """Mean of img over each grid cell; img is [H, W]."""
    sums = np.add.reduceat(np.add.reduceat(img, row_edges, axis=0), col_edges, axis=1)
    rows = np.diff(np.append(row_edges, img.shape[0]))
    cols = np.diff(np.append(col_edges, img.shape[1]))
    return sums / (rows[:, None] * cols[None, :])


def extract_appearance_proxy(clip: FrameSequence,
                             grid: tuple[int, int] = (32, 32)) -> ModalityVolume:
    """Grid-statistics proxy over the first 24 frames; output [6,24,gh,gw].

    Cell boundaries split H and W by integer division, so any frame size with
    H >= gh and W >= gw works without resampling.
    """
    gh, gw = grid
    if len(clip) < CLIP_TIME:
        raise DataError(
            f"appearance proxy needs >= {CLIP_TIME} frames, clip has {len(clip)}")
    h, w = clip.size
    if h < gh or w < gw:
        raise DataError(f"frames {h}x{w} smaller than grid {gh}x{gw}")
    row_edges = (np.arange(gh) * h) // gh
    col_edges = (np.arange(gw) * w) // gw

    out = np.empty((APPEARANCE_CHANNELS, CLIP_TIME, gh, gw), dtype=np.float32)
    for t in range(CLIP_TIME):
        rgb = clip.frames[t].astype(np.float32) / 255.0
        intensity = rgb.mean(axis=2)
        gy, gx = np.gradient(intensity)
        for c in range(3):
            out[c, t] = _cell_reduce(rgb[:, :, c], row_edges, col_edges)
        mean_sq = _cell_reduce(intensity * intensity, row_edges, col_edges)
        mean = _cell_reduce(intensity, row_edges, col_edges)
        out[3, t] = np.sqrt(np.maximum(mean_sq - mean * mean, 0.0))
        out[4, t] = _cell_reduce(np.abs(gx), row_edges, col_edges)
        out[5, t] = _cell_reduce(np.abs(gy), row_edges, col_edges)
    return ModalityVolume("appearance", out)
