"""Grad-CAM over space and time for the 3D ConvNet experts.

Channel weights are the mean over (t,h,w) of d(logit)/d(activation); the
ReLU'd weighted sum is trilinearly upsampled to [24,H,W] and normalized by
its max (an all-zero map stays all-zero: "nothing discriminative").
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .classifier import ConvNet3D, prepare_volume
from .cvr import (CLIP_TIME, FrameSequence, ModalityVolume, trilinear_resize,
                  write_cvrt)
from .errors import DataError
from .nn import Network

DEFAULT_LAYER = "block3"


@dataclass
class Heatmap:
    values: np.ndarray        # [24,H,W] in [0,1]
    target_layer: str
    raw: np.ndarray           # pre-normalization map, non-negative


def gradcam_from_network(net: Network, x: np.ndarray, layer_name: str,
                         out_shape: tuple[int, int, int]) -> Heatmap:
    """Core computation on a prepared [1,C,T,H,W] input."""
    net.forward(x, keep_activations=True)
    net.backward(np.ones(1, dtype=x.dtype))
    act = net.activation(layer_name)
    grad = net.activation_grad(layer_name)
    if act.ndim != 5:
        raise DataError(
            f"layer {layer_name!r} is not a conv block output (shape {act.shape})")
    weights = grad[0].mean(axis=(1, 2, 3))            # [C]
    cam = np.tensordot(weights, act[0], axes=(0, 0))  # [t,h,w]
    cam = np.maximum(cam, 0.0)
    raw = trilinear_resize(cam, out_shape)
    peak = float(raw.max())
    values = raw / peak if peak > 0 else raw.copy()
    return Heatmap(values=values.astype(np.float32), target_layer=layer_name,
                   raw=raw.astype(np.float32))


def compute_gradcam(model: ConvNet3D, volume: ModalityVolume,
                    target_layer: str = DEFAULT_LAYER) -> Heatmap:
    """Heatmap of the raw fake-logit for one clip; never mutates the model."""
    layer = model.resolve_layer(target_layer)
    x = prepare_volume(model, volume)[None]
    out_shape = (CLIP_TIME, *model.input_hw)
    hm = gradcam_from_network(model.network, x, layer, out_shape)
    return Heatmap(values=hm.values, target_layer=target_layer, raw=hm.raw)


def uniform_random_heatmap(shape: tuple[int, int, int], seed: int) -> Heatmap:
    """Baseline: iid U(0,1) values, same normalization as a real heatmap."""
    vals = np.random.default_rng(seed).random(shape).astype(np.float32)
    peak = float(vals.max())
    return Heatmap(values=vals / peak if peak > 0 else vals,
                   target_layer="random", raw=vals)


def localization_score(heatmap: Heatmap, mask: np.ndarray,
                       threshold: float = 0.5) -> float:
    """IoU between the thresholded heatmap and a binary artifact mask."""
    mask = np.asarray(mask)
    if heatmap.values.shape != mask.shape:
        raise DataError(
            f"heatmap {heatmap.values.shape} vs mask {mask.shape} shape mismatch")
    m = mask > 0.5
    if not m.any():
        raise DataError("artifact mask is empty")
    h = heatmap.values > threshold
    union = np.logical_or(h, m).sum()
    inter = np.logical_and(h, m).sum()
    return float(inter / union)


def resample_mask(mask: np.ndarray, target_hw: tuple[int, int]) -> np.ndarray:
    """Downsample a binary artifact mask to the working resolution.

    A target cell is on if any source pixel inside it is on, so the mask
    stays a superset of the artifact under coarsening.
    """
    mask = np.asarray(mask)
    t, big_h, big_w = mask.shape
    h, w = target_hw
    if (big_h, big_w) == (h, w):
        return (mask > 0.5).astype(np.float32)
    if big_h % h == 0 and big_w % w == 0:
        fh, fw = big_h // h, big_w // w
        return (mask.reshape(t, h, fh, w, fw).max(axis=(2, 4)) > 0.5) \
            .astype(np.float32)
    from .cvr import area_downsample
    return (area_downsample(mask.astype(np.float32), target_hw) > 1e-6) \
        .astype(np.float32)


def _ramp(v: np.ndarray) -> np.ndarray:
    """Monotone black->red->yellow ramp of heat intensity; [H,W] -> [H,W,3]."""
    r = np.clip(2 * v, 0, 1)
    g = np.clip(2 * v - 1, 0, 1)
    b = np.zeros_like(v)
    return np.stack([r, g, b], axis=-1)


def export_heatmap_frames(heatmap: Heatmap, clip: FrameSequence, out_dir) -> list[Path]:
    """24 grayscale+ramp overlay PNGs plus the heatmap as CVRT."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h, w = clip.size
    written = []
    for t in range(CLIP_TIME):
        gray = clip.frames[t].astype(np.float32).mean(axis=2) / 255.0
        heat = heatmap.values[t]
        if heat.shape != (h, w):
            heat = trilinear_resize(heatmap.values[t][None], (1, h, w))[0]
        rgb = 0.5 * gray[:, :, None] + 0.5 * _ramp(heat)
        img = np.round(np.clip(rgb, 0, 1) * 255).astype(np.uint8)
        p = out_dir / f"frame_{t:02d}.png"
        Image.fromarray(img).save(p)
        written.append(p)
    cvrt_path = out_dir / "heatmap.cvrt"
    write_cvrt(cvrt_path, heatmap.values)
    written.append(cvrt_path)
    return written
