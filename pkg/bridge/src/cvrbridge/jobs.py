"""Export jobs: shape contracts, pooling/resizing, sidecar metadata.

Output contracts (time extent always 24):
    appearance      [C, 24, H, W]   per-frame feature maps, first 24 frames
    flow            [2, 24, H, W]   24 adjacent-pair fields, vectors rescaled
                                    into the target resolution's pixel units
    depth_relative  [1, 24, H, W]   raw model output, normalization downstream
    depth_metric    [1, 24, H, W]   positive metres, never rescaled
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .cvrt import write_cvrt

TIME_EXTENT = 24

MODALITIES = ("appearance", "flow", "depth_relative", "depth_metric")

DEFAULT_MODELS = {
    "appearance": "facebook/dinov2-small",
    "flow": "torchvision/raft_small",
    "depth_relative": "LiheYoung/depth-anything-small-hf",
    "depth_metric": "Intel/zoedepth-nyu-kitti",
}


class ModelUnavailable(RuntimeError):
    """A pretrained model (or its runtime) could not be loaded."""


@dataclass
class BridgeJob:
    frames_path: Path
    modality: str
    out_path: Path
    model: str = ""
    target_hw: tuple[int, int] = (32, 32)

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}")
        if not self.model:
            self.model = DEFAULT_MODELS[self.modality]
        self.frames_path = Path(self.frames_path)
        self.out_path = Path(self.out_path)


def pool_to_grid(maps: np.ndarray, target_hw: tuple[int, int]) -> np.ndarray:
    """Adaptive average pooling of [..., h, w] onto the target grid."""
    *lead, h, w = maps.shape
    th, tw = target_hw
    if h < th or w < tw:
        # upsample by nearest-repeat first so every target cell has support
        ry = int(np.ceil(th / h))
        rx = int(np.ceil(tw / w))
        maps = np.repeat(np.repeat(maps, ry, axis=-2), rx, axis=-1)
        *lead, h, w = maps.shape
    ys = (np.arange(th + 1) * h) // th
    xs = (np.arange(tw + 1) * w) // tw
    out = np.empty((*lead, th, tw), dtype=np.float32)
    for i in range(th):
        for j in range(tw):
            out[..., i, j] = maps[..., ys[i]:ys[i + 1], xs[j]:xs[j + 1]] \
                .mean(axis=(-2, -1))
    return out


def write_sidecar(job: BridgeJob, channels: int) -> Path:
    sidecar = job.out_path.with_suffix(job.out_path.suffix + ".json")
    sidecar.write_text(json.dumps({
        "modality": job.modality,
        "model": job.model,
        "channels": channels,
        "source_frames": str(job.frames_path),
        "created": datetime.now(timezone.utc).isoformat(),
    }, indent=1))
    return sidecar


def finish_export(job: BridgeJob, volume: np.ndarray) -> Path:
    """Validate the shape contract, write CVRT + sidecar."""
    if volume.ndim != 4 or volume.shape[1] != TIME_EXTENT:
        raise ValueError(
            f"{job.modality} volume must be [C,{TIME_EXTENT},H,W], "
            f"got {volume.shape}")
    expect_c = {"flow": 2, "depth_relative": 1, "depth_metric": 1}
    if job.modality in expect_c and volume.shape[0] != expect_c[job.modality]:
        raise ValueError(
            f"{job.modality} volume must have {expect_c[job.modality]} "
            f"channels, got {volume.shape[0]}")
    if not np.all(np.isfinite(volume)):
        raise ValueError(f"{job.modality} export contains non-finite values")
    if job.modality == "depth_metric" and np.any(volume <= 0):
        raise ValueError("metric depth must be strictly positive metres")
    job.out_path.parent.mkdir(parents=True, exist_ok=True)
    write_cvrt(job.out_path, volume.astype(np.float32))
    write_sidecar(job, int(volume.shape[0]))
    return job.out_path
