"""Procedural 2.5D scenes: textured sprites on smooth spline trajectories over
a panning background, rendered far-to-near with analytic depth and flow.

Everything is a pure function of the scene description, which is itself a
pure function of a seed, so re-rendering after an injector edit is exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.ndimage import map_coordinates, zoom

from ..cvr import FrameSequence
from ..errors import DataError
from .color import shift_hue

N_FRAMES = 25
BG_DEPTH_M = 20.0
# antialiased sprite edge width; an integer width keeps the lattice sum of
# the edge ramp exactly phase-invariant (Poisson summation), so apparent
# size does not ripple as sprites translate subpixel
EDGE_SOFT_PX = 2.0
OWNER_BG = -1

SHAPES = ("disc", "square", "diamond")


def _bezier(p0, p1, p2, n=N_FRAMES):
    s = np.linspace(0.0, 1.0, n)[:, None]
    return ((1 - s) ** 2) * p0 + 2 * (1 - s) * s * p1 + s * s * p2


@dataclass
class Sprite:
    shape: str
    depth_m: float
    radius_px: float                 # apparent radius; constant unless drifted
    path: np.ndarray                 # [25,2] screen (x, y) centers, pan excluded
    texture: np.ndarray              # [th,tw] grayscale bitmap in [0,1]
    tint: np.ndarray                 # [3] base color
    scale: np.ndarray = None         # [25] size multiplier (ScaleDrift)
    hue_turns: np.ndarray = None     # [25] hue rotation (AppearanceFlicker)
    tex_phase: np.ndarray = None     # [25,2] texel offset (AppearanceFlicker)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise DataError(f"unknown sprite shape {self.shape!r}")
        if self.scale is None:
            self.scale = np.ones(N_FRAMES)
        if self.hue_turns is None:
            self.hue_turns = np.zeros(N_FRAMES)
        if self.tex_phase is None:
            self.tex_phase = np.zeros((N_FRAMES, 2))


@dataclass
class SceneDef:
    seed: int
    resolution: int
    sprites: list[Sprite]
    pan: np.ndarray                          # [25,2] camera-content offset
    bg_texture: np.ndarray                   # [hb,wb,3]
    draw_swaps: list = field(default_factory=list)  # (a, b, i, j) order swaps

    def copy(self) -> "SceneDef":
        return SceneDef(
            seed=self.seed, resolution=self.resolution,
            sprites=[replace(s, path=s.path.copy(), scale=s.scale.copy(),
                             hue_turns=s.hue_turns.copy(),
                             tex_phase=s.tex_phase.copy())
                     for s in self.sprites],
            pan=self.pan.copy(), bg_texture=self.bg_texture,
            draw_swaps=list(self.draw_swaps))


@dataclass
class SceneRender:
    frames: FrameSequence                    # 25 uint8 RGB frames
    depth: np.ndarray                        # [25,H,W] metric, true-order
    owner: np.ndarray                        # [25,H,W] visible sprite id (draw order)
    flow: np.ndarray                         # [2,24,H,W] analytic visible motion
    coverage: np.ndarray                     # [n_sprites,25,H,W] per-sprite alpha


@dataclass
class GroundTruth:
    label: str
    depth: np.ndarray
    flow: np.ndarray
    mask: Optional[np.ndarray]               # [24,H,W] 0/1, fake clips only
    injectors: list = field(default_factory=list)


def _octave_noise(rng, size, cells=(7, 13), amps=(1.0, 0.5)):
    img = np.zeros((size, size))
    for n, a in zip(cells, amps):
        img += a * zoom(rng.random((n, n)), size / n, order=3)[:size, :size]
    lo, hi = img.min(), img.max()
    return (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)


def make_scene(seed: int, resolution: int = 64, n_sprites: int | None = None,
               with_pan: bool | None = None) -> SceneDef:
    """Deterministic scene from a seed: 2-5 sprites on crossing-prone Bezier
    paths, distinct depths, apparent size tied to 1/depth."""
    rng = np.random.default_rng(seed)
    res = resolution
    if n_sprites is None:
        n_sprites = int(rng.integers(2, 5))
    if with_pan is None:
        with_pan = rng.random() < 0.7

    bg_pad = 24
    bg_gray = _octave_noise(rng, res + bg_pad)
    lo = rng.uniform(0.15, 0.35, size=3)
    hi = rng.uniform(0.55, 0.8, size=3)
    bg_texture = lo + bg_gray[:, :, None] * (hi - lo)

    # stratified distinct depths
    order = rng.permutation(n_sprites)
    depths = 2.5 + (12.0 - 2.5) * (order + rng.uniform(0.15, 0.85, n_sprites)) / n_sprites

    # slow, smooth trajectories: an appearance change in place must dominate
    # the temporal variation real motion induces at the working cell size
    sprites = []
    for k in range(n_sprites):
        shape = SHAPES[int(rng.integers(0, len(SHAPES)))]
        radius = float(rng.uniform(9.0, 15.0))
        center = np.array([rng.uniform(0.22, 0.78) * res,
                           rng.uniform(0.22, 0.78) * res])
        span = rng.uniform(1.0, 5.0)  # total travel over the clip, px
        ang = rng.uniform(0, 2 * np.pi)
        half = 0.5 * span * np.array([np.cos(ang), np.sin(ang)])
        p0, p2 = center - half, center + half
        waypoint = (p0 + p2) / 2 + rng.uniform(-1.5, 1.5, 2)
        p1 = 2 * waypoint - (p0 + p2) / 2
        path = _bezier(p0, p1, p2)
        texture = _octave_noise(rng, 8, cells=(3, 5), amps=(1.0, 0.7))
        tint = rng.uniform(0.35, 0.95, size=3)
        sprites.append(Sprite(shape=shape, depth_m=float(depths[k]),
                              radius_px=radius, path=path, texture=texture,
                              tint=tint))

    if with_pan:
        amp = rng.uniform(0.3, 1.5)
        ang = rng.uniform(0, 2 * np.pi)
        drift = amp * np.array([np.cos(ang), np.sin(ang)])
        mid = drift * rng.uniform(0.3, 0.7) + rng.normal(0, 0.2, 2)
        pan = _bezier(np.zeros(2), mid, drift)
    else:
        pan = np.zeros((N_FRAMES, 2))

    return SceneDef(seed=seed, resolution=res, sprites=sprites, pan=pan,
                    bg_texture=bg_texture)


def _shape_distance(shape: str, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if shape == "disc":
        return np.sqrt(u * u + v * v) - 1.0
    if shape == "square":
        return np.maximum(np.abs(u), np.abs(v)) - 1.0
    return (np.abs(u) + np.abs(v)) / np.sqrt(2.0) - 1.0  # diamond


def _draw_order(scene: SceneDef, t: int) -> list[int]:
    """Far-to-near indices, with any active draw swaps applied."""
    keys = {i: s.depth_m for i, s in enumerate(scene.sprites)}
    for (a, b, i, j) in scene.draw_swaps:
        if a <= t <= b:
            keys[i], keys[j] = keys[j], keys[i]
    return sorted(keys, key=lambda i: -keys[i])


def render_scene(scene: SceneDef) -> SceneRender:
    res = scene.resolution
    n = len(scene.sprites)
    yy, xx = np.mgrid[0:res, 0:res].astype(np.float64)

    frames = np.empty((N_FRAMES, res, res, 3), dtype=np.uint8)
    depth = np.empty((N_FRAMES, res, res), dtype=np.float32)
    owner = np.empty((N_FRAMES, res, res), dtype=np.int16)
    coverage = np.zeros((max(n, 1), N_FRAMES, res, res), dtype=np.float32)

    bg_pad = (scene.bg_texture.shape[0] - res) // 2
    for t in range(N_FRAMES):
        px, py = scene.pan[t]
        bg = np.stack([
            map_coordinates(scene.bg_texture[:, :, c],
                            [yy + bg_pad + py, xx + bg_pad + px],
                            order=1, mode="grid-wrap")
            for c in range(3)], axis=-1)
        canvas = bg
        own = np.full((res, res), OWNER_BG, dtype=np.int16)

        alphas = {}
        colors = {}
        for i, s in enumerate(scene.sprites):
            cx, cy = s.path[t] + scene.pan[t]
            r = s.radius_px * s.scale[t]
            u = (xx - cx) / r
            v = (yy - cy) / r
            d_px = _shape_distance(s.shape, u, v) * r
            alpha = np.clip(0.5 - d_px / EDGE_SOFT_PX, 0.0, 1.0)
            alphas[i] = alpha
            coverage[i, t] = alpha
            if not alpha.any():
                colors[i] = None
                continue
            th, tw = s.texture.shape
            tu = (u + 1.0) * 0.5 * tw - 0.5 + s.tex_phase[t, 0]
            tv = (v + 1.0) * 0.5 * th - 0.5 + s.tex_phase[t, 1]
            g = map_coordinates(s.texture, [tv, tu], order=1, mode="grid-wrap")
            col = s.tint[None, None, :] * (0.55 + 0.9 * (g[:, :, None] - 0.5))
            col = np.clip(col, 0.0, 1.0)
            if s.hue_turns[t] != 0.0:
                col = shift_hue(col, s.hue_turns[t])
            colors[i] = col

        for i in _draw_order(scene, t):
            if colors[i] is None:
                continue
            a = alphas[i][:, :, None]
            canvas = a * colors[i] + (1 - a) * canvas
            own[alphas[i] > 0.5] = i

        # depth always follows true depth order, not draw order
        dep = np.full((res, res), BG_DEPTH_M, dtype=np.float32)
        for i in sorted(range(n), key=lambda i: -scene.sprites[i].depth_m):
            dep[alphas[i] > 0.5] = scene.sprites[i].depth_m

        frames[t] = np.round(np.clip(canvas, 0.0, 1.0) * 255).astype(np.uint8)
        depth[t] = dep
        owner[t] = own

    flow = analytic_flow(scene, owner)
    return SceneRender(frames=FrameSequence(frames), depth=depth, owner=owner,
                       flow=flow, coverage=coverage)


def analytic_flow(scene: SceneDef, owner: np.ndarray) -> np.ndarray:
    """Screen-space motion of the visible surface for each adjacent pair."""
    res = scene.resolution
    yy, xx = np.mgrid[0:res, 0:res].astype(np.float64)
    flow = np.empty((2, N_FRAMES - 1, res, res), dtype=np.float32)
    for t in range(N_FRAMES - 1):
        dpan = scene.pan[t + 1] - scene.pan[t]
        u = np.full((res, res), dpan[0])
        v = np.full((res, res), dpan[1])
        for i, s in enumerate(scene.sprites):
            m = owner[t] == i
            if not m.any():
                continue
            c_now = s.path[t] + scene.pan[t]
            c_next = s.path[t + 1] + scene.pan[t + 1]
            ratio = (s.radius_px * s.scale[t + 1]) / (s.radius_px * s.scale[t])
            u[m] = (c_next[0] - c_now[0]) + (ratio - 1.0) * (xx[m] - c_now[0])
            v[m] = (c_next[1] - c_now[1]) + (ratio - 1.0) * (yy[m] - c_now[1])
        flow[0, t] = u
        flow[1, t] = v
    return flow


def generate_scene(spec: SceneDef) -> tuple[FrameSequence, GroundTruth]:
    """Render a clean scene: the corpus 'real' sample with full ground truth."""
    render = render_scene(spec)
    gt = GroundTruth(label="real", depth=render.depth, flow=render.flow,
                     mask=None, injectors=[])
    return render.frames, gt
