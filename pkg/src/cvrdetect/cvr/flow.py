"""Dense optical flow: coarse-to-fine pyramidal local least squares.

Three pyramid levels (Gaussian-antialiased), 5x5 window, three Gauss-Newton
refinement iterations per level, cubic-spline warping, and a light 3x3 mean
regularization of the field after each level (kills independent per-pixel
solver noise without washing out motion boundaries). Flow vectors are
(u, v) = (x, y) pixel displacement at the field's own resolution;
rank-deficient windows (no texture) yield zero flow.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates, spline_filter, uniform_filter

from ..errors import DataError
from .frames import FrameSequence
from .resample import area_downsample
from .volume import CLIP_TIME, ModalityVolume

LEVELS = 3
WINDOW = 5
ITERS = 3
MIN_EIG = 1e-5    # smallest-eigenvalue gate for the 2x2 normal matrix
STEP_CAP = 1.0    # per-iteration update clamp, px
FLOW_SMOOTH = 3   # mean-filter size applied to (u, v) after each level


def _to_gray(frame: np.ndarray) -> np.ndarray:
    return frame.astype(np.float64).mean(axis=2) / 255.0


def _pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    pyr = [img]
    for _ in range(levels - 1):
        cur = gaussian_filter(pyr[-1], 1.0, mode="nearest")
        h, w = cur.shape[0] // 2 * 2, cur.shape[1] // 2 * 2
        pyr.append(cur[:h, :w].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3)))
    return pyr


def flow_pair(f0: np.ndarray, f1: np.ndarray) -> np.ndarray:
    """Flow field [2,H,W] carrying grayscale f0 onto f1."""
    if f0.shape != f1.shape:
        raise DataError(f"frame shape mismatch {f0.shape} vs {f1.shape}")
    p0 = _pyramid(f0, LEVELS)
    p1 = _pyramid(f1, LEVELS)
    u = np.zeros_like(p0[-1])
    v = np.zeros_like(p0[-1])
    for lvl in range(LEVELS - 1, -1, -1):
        a, b = p0[lvl], p1[lvl]
        h, w = a.shape
        if u.shape != a.shape:
            u = np.repeat(np.repeat(u, 2, axis=0), 2, axis=1)[:h, :w] * 2
            v = np.repeat(np.repeat(v, 2, axis=0), 2, axis=1)[:h, :w] * 2
        yy, xx = np.mgrid[0:h, 0:w]
        b_coef = spline_filter(b, order=3, mode="nearest")
        gy0, gx0 = np.gradient(a)
        for _ in range(ITERS):
            if not (u.any() or v.any()):
                bw = b  # warp by zero flow is the identity; keeps exactness
            else:
                bw = map_coordinates(b_coef, [yy + v, xx + u], order=3,
                                     mode="nearest", prefilter=False)
            it = bw - a
            gy1, gx1 = np.gradient(bw)
            gx = 0.5 * (gx0 + gx1)
            gy = 0.5 * (gy0 + gy1)
            sxx = uniform_filter(gx * gx, WINDOW, mode="nearest")
            sxy = uniform_filter(gx * gy, WINDOW, mode="nearest")
            syy = uniform_filter(gy * gy, WINDOW, mode="nearest")
            sxt = uniform_filter(gx * it, WINDOW, mode="nearest")
            syt = uniform_filter(gy * it, WINDOW, mode="nearest")
            trace = sxx + syy
            det = sxx * syy - sxy * sxy
            lam_min = 0.5 * (trace - np.sqrt(np.maximum(trace * trace - 4 * det, 0.0)))
            ok = lam_min > MIN_EIG
            det_safe = np.where(ok, det, 1.0)
            du = np.where(ok, (-syy * sxt + sxy * syt) / det_safe, 0.0)
            dv = np.where(ok, (sxy * sxt - sxx * syt) / det_safe, 0.0)
            u = u + np.clip(du, -STEP_CAP, STEP_CAP)
            v = v + np.clip(dv, -STEP_CAP, STEP_CAP)
        u = uniform_filter(u, FLOW_SMOOTH, mode="nearest")
        v = uniform_filter(v, FLOW_SMOOTH, mode="nearest")
    return np.stack([u, v])


def extract_flow(clip: FrameSequence,
                 target_size: tuple[int, int] | None = None) -> ModalityVolume:
    """24 dense flow fields from the 24 adjacent pairs of the first 25 frames.

    With target_size, fields are area-averaged to that resolution and the
    vectors rescaled into its pixel units.
    """
    if len(clip) < CLIP_TIME + 1:
        raise DataError(
            f"flow needs >= {CLIP_TIME + 1} frames, clip has {len(clip)}")
    grays = [_to_gray(clip.frames[t]) for t in range(CLIP_TIME + 1)]
    fields = [flow_pair(grays[t], grays[t + 1]) for t in range(CLIP_TIME)]
    vol = np.stack(fields, axis=1).astype(np.float32)  # [2,24,H,W]
    if target_size is not None:
        h, w = grays[0].shape
        h2, w2 = target_size
        vol = area_downsample(vol, target_size)
        vol[0] *= w2 / w
        vol[1] *= h2 / h
    return ModalityVolume("flow", vol)
