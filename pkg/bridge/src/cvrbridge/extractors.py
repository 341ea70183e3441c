"""Model-backed exporters.

Each exporter splits into a loader (the part that needs pretrained weights)
and a pure post-processing path; tests drive the latter with stand-in
callables. A missing model raises ModelUnavailable naming the dependency,
never a silent fallback.
"""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .frames import load_clip
from .jobs import TIME_EXTENT, BridgeJob, ModelUnavailable, finish_export, pool_to_grid


def _unavailable(job: BridgeJob, what: str, err: Exception) -> ModelUnavailable:
    return ModelUnavailable(
        f"{job.modality} export needs {what} ({job.model}); loading failed: "
        f"{type(err).__name__}: {err}. Fetch the weights on a connected "
        f"machine or pass a reachable --model.")


# ---- appearance: per-frame ViT patch features ------------------------------

def _load_dinov2(job: BridgeJob) -> Callable[[np.ndarray], np.ndarray]:
    try:
        import torch
        from transformers import AutoImageProcessor, AutoModel
        processor = AutoImageProcessor.from_pretrained(job.model)
        model = AutoModel.from_pretrained(job.model)
        model.eval()
    except Exception as e:  # missing package, no weights, no network
        raise _unavailable(job, "a vision foundation model", e)

    def run(frames: np.ndarray) -> np.ndarray:
        feats = []
        with torch.no_grad():
            for t in range(frames.shape[0]):
                inputs = processor(images=frames[t], return_tensors="pt")
                out = model(**inputs).last_hidden_state[0]
                n_special = out.shape[0] - _square(out.shape[0])
                tokens = out[n_special:]
                side = int(np.sqrt(tokens.shape[0]))
                grid = tokens.reshape(side, side, -1).permute(2, 0, 1)
                feats.append(grid.numpy())
        return np.stack(feats, axis=1)  # [C, T, h, w]

    return run


def _square(n: int) -> int:
    """Largest perfect square <= n (patch tokens after special tokens)."""
    side = int(np.sqrt(n))
    return side * side


def export_appearance(job: BridgeJob,
                      backbone: Optional[Callable] = None) -> "Path":
    """Per-frame patch-token maps for the first 24 frames, pooled to grid."""
    frames = load_clip(job.frames_path)[:TIME_EXTENT]
    run = backbone or _load_dinov2(job)
    feats = np.asarray(run(frames), dtype=np.float32)
    if feats.ndim != 4 or feats.shape[1] != TIME_EXTENT:
        raise ValueError(
            f"backbone must return [C,{TIME_EXTENT},h,w], got {feats.shape}")
    vol = pool_to_grid(feats, job.target_hw)
    return finish_export(job, vol)


# ---- flow: learned estimator on adjacent pairs ------------------------------

def _load_raft(job: BridgeJob) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    try:
        import torch
        from torchvision.models.optical_flow import (Raft_Small_Weights,
                                                     raft_small)
        weights = Raft_Small_Weights.DEFAULT
        model = raft_small(weights=weights)
        model.eval()
        transforms = weights.transforms()
    except Exception as e:
        raise _unavailable(job, "a pretrained optical-flow network", e)

    def run(f0: np.ndarray, f1: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            a = torch.from_numpy(f0).permute(2, 0, 1)[None].float() / 255.0
            b = torch.from_numpy(f1).permute(2, 0, 1)[None].float() / 255.0
            a, b = transforms(a, b)
            flow = model(a, b)[-1][0]
        return flow.numpy()  # [2, H, W]

    return run


def export_flow(job: BridgeJob,
                pair_fn: Optional[Callable] = None) -> "Path":
    """24 learned flow fields, resampled with vectors rescaled to target."""
    frames = load_clip(job.frames_path)[:TIME_EXTENT + 1]
    run = pair_fn or _load_raft(job)
    h, w = frames.shape[1:3]
    th, tw = job.target_hw
    fields = []
    for t in range(TIME_EXTENT):
        f = np.asarray(run(frames[t], frames[t + 1]), dtype=np.float32)
        if f.shape != (2, h, w):
            raise ValueError(f"flow estimator returned {f.shape}, "
                             f"expected (2, {h}, {w})")
        fields.append(f)
    vol = np.stack(fields, axis=1)  # [2, 24, H, W]
    vol = pool_to_grid(vol, job.target_hw)
    vol[0] *= tw / w
    vol[1] *= th / h
    return finish_export(job, vol)


# ---- depth: monocular estimation per frame ----------------------------------

def _load_depth_model(job: BridgeJob) -> Callable[[np.ndarray], np.ndarray]:
    try:
        import torch
        from transformers import pipeline
        pipe = pipeline("depth-estimation", model=job.model)
    except Exception as e:
        raise _unavailable(job, "a monocular depth estimator", e)

    def run(frame: np.ndarray) -> np.ndarray:
        from PIL import Image
        out = pipe(Image.fromarray(frame))
        return np.asarray(out["predicted_depth"].squeeze().numpy(),
                          dtype=np.float32)

    return run


def export_depth(job: BridgeJob,
                 frame_fn: Optional[Callable] = None) -> "Path":
    """24 per-frame depth maps; metric stays in metres, relative stays raw."""
    frames = load_clip(job.frames_path)[:TIME_EXTENT]
    run = frame_fn or _load_depth_model(job)
    maps = []
    for t in range(TIME_EXTENT):
        d = np.asarray(run(frames[t]), dtype=np.float32)
        if d.ndim != 2:
            raise ValueError(f"depth estimator returned shape {d.shape}")
        maps.append(d)
    vol = pool_to_grid(np.stack(maps)[None], job.target_hw)
    return finish_export(job, vol)


EXPORTERS = {
    "appearance": export_appearance,
    "flow": export_flow,
    "depth_relative": export_depth,
    "depth_metric": export_depth,
}
