"""Artifact injectors: parameterized scene edits that make a clip fake.

AppearanceFlicker  per-frame hue shift + texture-phase scramble on one sprite
MotionJitter       enveloped random walk added to one sprite's trajectory
OcclusionFlip      draw order of two overlapping sprites inverted; depth maps
                   keep the true-depth values the rendering now contradicts
ScaleDrift         rendered size swells while the depth value stays fixed

Fake ground truth follows what is actually rendered (flow tracks the jittered
or drifting surfaces) except for OcclusionFlip depth, which is the point.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..cvr import CLIP_TIME, FrameSequence
from ..errors import DataError
from .scene import GroundTruth, SceneDef, render_scene

INJECTOR_KINDS = ("AppearanceFlicker", "MotionJitter", "OcclusionFlip",
                  "ScaleDrift")
APPEARANCE_KINDS = ("AppearanceFlicker", "OcclusionFlip")
MOTION_GEOMETRY_KINDS = ("MotionJitter", "ScaleDrift")


@dataclass(frozen=True)
class Injector:
    kind: str
    magnitude: float
    frames: tuple[int, int]        # inclusive range within [0, 23]
    sprite: int
    sprite2: Optional[int] = None  # OcclusionFlip partner
    family: str = "A"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in INJECTOR_KINDS:
            raise DataError(f"unknown injector kind {self.kind!r}")
        if self.magnitude <= 0:
            raise DataError(
                f"degenerate injector: magnitude {self.magnitude} changes nothing")
        a, b = self.frames
        if not (0 <= a <= b <= CLIP_TIME - 1):
            raise DataError(
                f"active range {self.frames} outside [0, {CLIP_TIME - 1}]")
        if self.kind == "OcclusionFlip" and self.sprite2 is None:
            raise DataError("OcclusionFlip needs two sprites")

    def to_json(self) -> dict:
        return {"kind": self.kind, "magnitude": self.magnitude,
                "frames": list(self.frames)}


def _envelope(a: int, b: int) -> np.ndarray:
    """sin^2 window over the active frames: zero at both ends, smooth."""
    n = b - a + 1
    if n == 1:
        return np.ones(1)
    return np.sin(np.pi * np.arange(n) / (n - 1)) ** 2


def _apply_to_scene(scene: SceneDef, inj: Injector) -> None:
    a, b = inj.frames
    if inj.sprite >= len(scene.sprites):
        raise DataError(
            f"injector targets sprite {inj.sprite}, scene has {len(scene.sprites)}")
    rng = np.random.default_rng(inj.seed)
    s = scene.sprites[inj.sprite]

    if inj.kind == "AppearanceFlicker":
        n = b - a + 1
        s.hue_turns[a:b + 1] = rng.uniform(-inj.magnitude, inj.magnitude, n)
        amp = inj.magnitude * s.texture.shape[0]
        s.tex_phase[a:b + 1] = rng.uniform(-amp, amp, (n, 2))
    elif inj.kind == "MotionJitter":
        steps = rng.normal(0.0, inj.magnitude, (b - a + 1, 2))
        walk = np.cumsum(steps, axis=0)
        s.path[a:b + 1] += walk * _envelope(a, b)[:, None]
    elif inj.kind == "ScaleDrift":
        s.scale[a:b + 1] = 1.0 + inj.magnitude * _envelope(a, b)
    elif inj.kind == "OcclusionFlip":
        if inj.sprite2 >= len(scene.sprites):
            raise DataError(f"injector targets sprite {inj.sprite2}, "
                            f"scene has {len(scene.sprites)}")
        scene.draw_swaps.append((a, b, inj.sprite, inj.sprite2))


def _check_flip_overlap(scene: SceneDef, inj: Injector) -> None:
    """Bounding-circle overlap of the two sprites somewhere in the range."""
    a, b = inj.frames
    s1 = scene.sprites[inj.sprite]
    s2 = scene.sprites[inj.sprite2]
    d = np.linalg.norm((s1.path[a:b + 1] + scene.pan[a:b + 1])
                       - (s2.path[a:b + 1] + scene.pan[a:b + 1]), axis=1)
    if not np.any(d < (s1.radius_px + s2.radius_px)):
        raise DataError(
            f"OcclusionFlip sprites {inj.sprite},{inj.sprite2} never overlap "
            f"in frames {inj.frames}")


def apply_injectors(scene: SceneDef,
                    injectors: list[Injector]) -> tuple[FrameSequence, GroundTruth]:
    """Render the scene with all injectors applied and label it fake.

    The artifact mask is exactly the per-frame set of pixels whose rendered
    value differs from the uninjected render (first 24 frames).
    """
    if not injectors:
        raise DataError("apply_injectors needs at least one injector")
    for inj in injectors:
        if inj.kind == "OcclusionFlip":
            _check_flip_overlap(scene, inj)

    base = render_scene(scene)
    modified = scene.copy()
    for inj in injectors:
        _apply_to_scene(modified, inj)
    out = render_scene(modified)

    diff = (out.frames.frames[:CLIP_TIME].astype(np.int16)
            - base.frames.frames[:CLIP_TIME].astype(np.int16))
    mask = (np.abs(diff).sum(axis=3) > 0).astype(np.float32)
    if not mask.any():
        raise DataError(
            "injectors produced a clip identical to the clean render; "
            "degenerate parameters")

    gt = GroundTruth(label="fake", depth=out.depth, flow=out.flow, mask=mask,
                     injectors=list(injectors))
    return out.frames, gt
