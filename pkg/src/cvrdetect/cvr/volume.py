"""Modality volume container and per-channel normalization."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DataError, assert_finite

CLIP_TIME = 24  # every modality volume spans exactly 24 frames / frame pairs

MODALITIES = ("appearance", "flow", "depth")

STD_FLOOR = 1e-6


@dataclass
class ChannelStats:
    mean: np.ndarray
    std: np.ndarray

    def to_json(self) -> dict:
        return {"mean": [float(x) for x in self.mean],
                "std": [float(x) for x in self.std]}

    @classmethod
    def from_json(cls, d: dict) -> "ChannelStats":
        return cls(mean=np.asarray(d["mean"], dtype=np.float32),
                   std=np.asarray(d["std"], dtype=np.float32))


@dataclass
class ModalityVolume:
    """One clip in one modality: tensor [C, 24, H, W], float32."""

    modality: str
    tensor: np.ndarray
    stats: Optional[ChannelStats] = None  # normalization actually applied

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise DataError(f"unknown modality {self.modality!r}")
        t = np.asarray(self.tensor, dtype=np.float32)
        if t.ndim != 4 or t.shape[1] != CLIP_TIME:
            raise DataError(
                f"{self.modality} volume must be [C,{CLIP_TIME},H,W], got {t.shape}")
        assert_finite(t, f"{self.modality} volume")
        self.tensor = t

    @property
    def channels(self) -> int:
        return self.tensor.shape[0]


def compute_stats(volumes: list[np.ndarray]) -> ChannelStats:
    """Per-channel mean/std over a list of [C,T,H,W] tensors (training split)."""
    if not volumes:
        raise DataError("cannot compute stats over an empty volume list")
    c = volumes[0].shape[0]
    total = np.zeros(c, dtype=np.float64)
    total_sq = np.zeros(c, dtype=np.float64)
    count = 0
    for v in volumes:
        if v.shape[0] != c:
            raise DataError(f"channel count drift: {v.shape[0]} vs {c}")
        flat = v.reshape(c, -1).astype(np.float64)
        total += flat.sum(axis=1)
        total_sq += (flat * flat).sum(axis=1)
        count += flat.shape[1]
    mean = total / count
    var = np.maximum(total_sq / count - mean * mean, 0.0)
    return ChannelStats(mean=mean.astype(np.float32),
                        std=np.sqrt(var).astype(np.float32))


def normalize_volume(vol: ModalityVolume, stats: ChannelStats) -> ModalityVolume:
    """(x - mean) / max(std, floor) per channel; stats recorded for audit."""
    if stats.mean.shape[0] != vol.channels or stats.std.shape[0] != vol.channels:
        raise DataError(
            f"stats have {stats.mean.shape[0]} channels, volume has {vol.channels}")
    std = np.maximum(stats.std, STD_FLOOR)
    out = (vol.tensor - stats.mean[:, None, None, None]) / std[:, None, None, None]
    return ModalityVolume(vol.modality, out.astype(np.float32), stats=stats)
