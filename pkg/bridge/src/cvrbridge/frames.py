"""Clip loading: numbered image directory or raw planar RGB8 + JSON sidecar."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

CLIP_FRAMES = 25


def load_clip(path) -> np.ndarray:
    """Returns [T,H,W,3] uint8; needs at least 25 frames."""
    path = Path(path)
    if path.is_dir():
        try:
            from PIL import Image
        except ImportError as e:
            raise RuntimeError("Pillow is required to read image directories") from e
        names = sorted(p for p in path.iterdir()
                       if p.suffix.lower() in (".png", ".bmp"))
        if not names:
            raise ValueError(f"no lossless images in {path}")
        frames = np.stack([np.asarray(Image.open(p).convert("RGB"),
                                      dtype=np.uint8) for p in names])
    else:
        sidecar = path.with_suffix(path.suffix + ".json")
        meta = json.loads(sidecar.read_text())
        t, h, w = int(meta["t"]), int(meta["h"]), int(meta["w"])
        raw = np.fromfile(path, dtype=np.uint8)
        if raw.size != t * 3 * h * w:
            raise ValueError(f"{path}: size does not match sidecar {meta}")
        frames = raw.reshape(t, 3, h, w).transpose(0, 2, 3, 1).copy()
    if frames.shape[0] < CLIP_FRAMES:
        raise ValueError(
            f"clip has {frames.shape[0]} frames, need >= {CLIP_FRAMES}")
    return frames
