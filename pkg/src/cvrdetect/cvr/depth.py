"""Depth volume assembly from per-frame depth maps.

There is no built-in monocular estimator: maps come from corpus ground truth
or from externally exported CVRT files. Metric depth passes through unscaled;
relative depth is min-max normalized per clip (it carries no absolute scale).
"""
from __future__ import annotations

import numpy as np

from ..errors import DataError
from .resample import area_downsample
from .volume import CLIP_TIME, ModalityVolume


def load_depth(maps: np.ndarray, kind: str = "metric",
               target_size: tuple[int, int] | None = None) -> ModalityVolume:
    """Build a [1,24,H,W] volume from >= 24 per-frame depth maps [T,H,W]."""
    maps = np.asarray(maps, dtype=np.float32)
    if maps.ndim != 3:
        raise DataError(f"depth maps must be [T,H,W], got {maps.shape}")
    if maps.shape[0] < CLIP_TIME:
        raise DataError(
            f"need >= {CLIP_TIME} depth frames, got {maps.shape[0]}")
    maps = maps[:CLIP_TIME]
    if kind == "metric":
        if np.any(maps < 0):
            raise DataError("metric depth contains negative values")
        vol = maps
    elif kind == "relative":
        lo, hi = float(maps.min()), float(maps.max())
        vol = (maps - lo) / (hi - lo) if hi > lo else np.zeros_like(maps)
    else:
        raise DataError(f"unknown depth kind {kind!r}")
    if target_size is not None:
        vol = area_downsample(vol, target_size)
    return ModalityVolume("depth", vol[None, :, :, :])
