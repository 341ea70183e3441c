"""Frame-sequence I/O and clip segmentation.

Accepted inputs: a directory of numbered lossless images (PNG), or a raw
planar RGB8 file ([T,3,H,W] bytes) with a JSON sidecar {"t","h","w"}.
"""
from __future__ import annotations

import json
import os
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from ..errors import DataError


class ShortVideoWarning(UserWarning):
    """Video shorter than one clip; segmentation yields nothing."""


@dataclass
class FrameSequence:
    """T x H x W x 3 uint8 RGB frames plus optional rate metadata."""

    frames: np.ndarray
    frame_rate: Optional[float] = None

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim != 4 or f.shape[3] != 3 or f.dtype != np.uint8:
            raise DataError(
                f"frames must be [T,H,W,3] uint8, got {f.shape} {f.dtype}")
        if f.shape[0] < 1:
            raise DataError("frame sequence must contain at least one frame")
        self.frames = f

    def __len__(self):
        return self.frames.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        return self.frames.shape[1], self.frames.shape[2]


def segment_clips(video: FrameSequence, clip_len: int = 25) -> list[FrameSequence]:
    """Consecutive non-overlapping clips from frame 0; remainder dropped.

    Returns floor(T / clip_len) clips; warns (ShortVideoWarning) and returns
    [] when the video is shorter than one clip.
    """
    if clip_len < 2:
        raise DataError(f"clip_len must be >= 2, got {clip_len}")
    t = len(video)
    n = t // clip_len
    if n == 0:
        warnings.warn(
            f"video has {t} frames, shorter than one {clip_len}-frame clip",
            ShortVideoWarning)
        return []
    return [FrameSequence(video.frames[i * clip_len:(i + 1) * clip_len],
                          video.frame_rate) for i in range(n)]


def load_frames(path) -> FrameSequence:
    """Load from an image directory or a raw RGB8 file with sidecar."""
    path = Path(path)
    if path.is_dir():
        names = sorted(p for p in path.iterdir()
                       if p.suffix.lower() in (".png", ".bmp"))
        if not names:
            raise DataError(f"no lossless image files in {path}")
        frames = []
        for p in names:
            img = np.asarray(Image.open(p).convert("RGB"), dtype=np.uint8)
            frames.append(img)
        shapes = {f.shape for f in frames}
        if len(shapes) != 1:
            raise DataError(f"frames in {path} disagree on resolution: {shapes}")
        return FrameSequence(np.stack(frames))
    sidecar = path.with_suffix(path.suffix + ".json")
    if not sidecar.exists():
        raise DataError(f"raw frame file {path} needs sidecar {sidecar.name}")
    meta = json.loads(sidecar.read_text())
    try:
        t, h, w = int(meta["t"]), int(meta["h"]), int(meta["w"])
    except KeyError as e:
        raise DataError(f"sidecar {sidecar} missing key {e}") from None
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size != t * 3 * h * w:
        raise DataError(
            f"{path}: expected {t * 3 * h * w} bytes for t={t} h={h} w={w}, "
            f"got {raw.size}")
    frames = raw.reshape(t, 3, h, w).transpose(0, 2, 3, 1)
    return FrameSequence(np.ascontiguousarray(frames))


def save_frames_raw(path, seq: FrameSequence) -> None:
    """Write planar RGB8 + sidecar atomically."""
    path = Path(path)
    planar = np.ascontiguousarray(seq.frames.transpose(0, 3, 1, 2))
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "wb") as f:
        f.write(planar.tobytes())
    os.replace(tmp, path)
    t, h, w = seq.frames.shape[0], seq.frames.shape[1], seq.frames.shape[2]
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps({"t": t, "h": h, "w": w}, sort_keys=True))


def save_frames_png(dir_path, seq: FrameSequence) -> list[Path]:
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    out = []
    for i in range(len(seq)):
        p = dir_path / f"frame_{i:04d}.png"
        Image.fromarray(seq.frames[i]).save(p)
        out.append(p)
    return out
