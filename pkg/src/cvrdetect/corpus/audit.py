"""Internal consistency audits for rendered scenes.

Real clips must satisfy: nearer sprites occlude, apparent size tracks
1/depth, and warping by the analytic flow reproduces the next frame.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import map_coordinates

from .scene import N_FRAMES, OWNER_BG, SceneDef, SceneRender


def audit_occlusion(render: SceneRender, scene: SceneDef) -> list[str]:
    """Violations of depth ordering: a contested pixel must never be owned by
    the farther sprite of the pair (a third, even nearer sprite may own it)."""
    out = []
    n = len(scene.sprites)
    for t in range(N_FRAMES):
        for i in range(n):
            for j in range(i + 1, n):
                both = (render.coverage[i, t] > 0.5) & (render.coverage[j, t] > 0.5)
                if not both.any():
                    continue
                far = i if scene.sprites[i].depth_m > scene.sprites[j].depth_m else j
                if np.any(render.owner[t][both] == far):
                    out.append(f"frame {t}: sprite pair ({i},{j}) has pixels "
                               f"owned by the farther sprite {far}")
    return out


def _fully_visible(scene: SceneDef, i: int) -> np.ndarray:
    """Frames where sprite i (at its rendered size) sits entirely in frame.

    Square and diamond corners extend to sqrt(2) times the nominal radius.
    """
    s = scene.sprites[i]
    extent = 1.0 if s.shape == "disc" else np.sqrt(2.0)
    pos = s.path + scene.pan
    r = s.radius_px * s.scale * extent + 2.5
    res = scene.resolution
    return ((pos[:, 0] - r >= 0) & (pos[:, 0] + r <= res - 1)
            & (pos[:, 1] - r >= 0) & (pos[:, 1] + r <= res - 1))


def size_depth_ratio_spread(render: SceneRender, scene: SceneDef) -> float:
    """Worst relative spread of apparent size * depth over the frames where
    the sprite is fully visible.

    Apparent size is the coverage-weighted RMS radius about the coverage
    centroid: exactly proportional to the rendered scale for any fixed shape,
    and subpixel-stable (a raw pixel-area count is not)."""
    res = scene.resolution
    yy, xx = np.mgrid[0:res, 0:res].astype(np.float64)
    worst = 0.0
    for i, s in enumerate(scene.sprites):
        full = np.flatnonzero(_fully_visible(scene, i))
        if len(full) < 2:
            continue
        sizes = []
        for t in full:
            a = render.coverage[i, t].astype(np.float64)
            total = a.sum()
            cx = (a * xx).sum() / total
            cy = (a * yy).sum() / total
            r2 = ((xx - cx) ** 2 + (yy - cy) ** 2)
            sizes.append(np.sqrt((a * r2).sum() / total))
        sizes = np.asarray(sizes) * s.depth_m
        worst = max(worst, float(sizes.max() / sizes.min() - 1.0))
    return worst


def brightness_constancy_error(render: SceneRender) -> float:
    """Mean |frame_{t+1}(p + flow) - frame_t(p)| over non-disoccluded pixels."""
    frames = render.frames.frames.astype(np.float64) / 255.0
    h, w = frames.shape[1:3]
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    errs = []
    for t in range(N_FRAMES - 1):
        u, v = render.flow[0, t], render.flow[1, t]
        ty, tx = yy + v, xx + u
        inb = (ty >= 0) & (ty <= h - 1) & (tx >= 0) & (tx <= w - 1)
        ty_r = np.clip(np.round(ty).astype(int), 0, h - 1)
        tx_r = np.clip(np.round(tx).astype(int), 0, w - 1)
        same_owner = render.owner[t + 1][ty_r, tx_r] == render.owner[t]
        valid = inb & same_owner
        if not valid.any():
            continue
        for c in range(3):
            warped = map_coordinates(frames[t + 1, :, :, c], [ty, tx],
                                     order=1, mode="nearest")
            errs.append(np.abs(warped - frames[t, :, :, c])[valid])
    return float(np.concatenate(errs).mean()) if errs else 0.0
