"""Corpus assembly: balanced real/fake clips per split with full ground truth.

Every fake clip carries exactly two injectors, one from the appearance group
(AppearanceFlicker | OcclusionFlip) and one from the motion/geometry group
(MotionJitter | ScaleDrift), so each modality stream contains a learnable
artifact in every fake clip. Families A and B draw injector magnitudes from
disjoint ranges per kind.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..cvr import FrameSequence, save_frames_raw, write_cvrt
from ..errors import DataError
from .injectors import (APPEARANCE_KINDS, MOTION_GEOMETRY_KINDS, Injector,
                        apply_injectors)
from .scene import N_FRAMES, SceneDef, generate_scene, make_scene

FAMILIES = ("A", "B")

# magnitude ranges per injector kind; disjoint between families per kind.
# OcclusionFlip magnitude is the flip duration as a fraction of 24 frames.
FAMILY_RANGES = {
    "A": {
        "AppearanceFlicker": (0.20, 0.32),
        "MotionJitter": (2.5, 4.5),
        "OcclusionFlip": (10 / 24, 16 / 24),
        "ScaleDrift": (0.30, 0.55),
    },
    "B": {
        "AppearanceFlicker": (0.07, 0.13),
        "MotionJitter": (0.9, 1.6),
        "OcclusionFlip": (4 / 24, 7 / 24),
        "ScaleDrift": (0.10, 0.18),
    },
}

SPLITS = ("train", "val", "test")


@dataclass
class CorpusConfig:
    out_dir: Path
    family: str
    n_train: int
    n_test: int
    n_val: int = 0
    seed: int = 0
    resolution: int = 64

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if self.family not in FAMILIES:
            raise DataError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.n_train < 1 or self.n_test < 1 or self.n_val < 0:
            raise DataError("per-class counts must be >= 1 (val may be 0)")


def _scene_for_flip(seed_seq: list[int], resolution: int, min_run: int):
    """Find a scene plus a flip pair/window with circle overlap sustained for
    at least min_run frames (so flip durations stay inside the family band)."""
    for attempt in range(60):
        rng = np.random.default_rng(seed_seq + [attempt])
        scene = make_scene(int(rng.integers(2 ** 31)), resolution=resolution)
        n = len(scene.sprites)
        best = None
        for i in range(n):
            for j in range(i + 1, n):
                si, sj = scene.sprites[i], scene.sprites[j]
                d = np.linalg.norm(si.path - sj.path, axis=1)
                close = d < 0.75 * (si.radius_px + sj.radius_px)
                run, start = 0, 0
                for t in range(N_FRAMES - 1):
                    if close[t]:
                        run += 1
                        if run == 1:
                            start = t
                        if best is None or run > best[0]:
                            best = (run, start, t, i, j)
                    else:
                        run = 0
        if best is not None and best[0] >= min_run:
            return scene, best[1:]
    raise DataError("could not find a scene with sustained sprite overlap")


def _largest_sprite(scene) -> int:
    return max(range(len(scene.sprites)),
               key=lambda i: scene.sprites[i].radius_px)


def _make_fake(clip_seed: list[int], family: str, resolution: int):
    """Sample the injector pair (one appearance-group, one motion/geometry)
    and produce (frames, gt)."""
    rng = np.random.default_rng(clip_seed)
    app_kind = APPEARANCE_KINDS[int(rng.integers(0, 2))]
    mg_kind = MOTION_GEOMETRY_KINDS[int(rng.integers(0, 2))]
    ranges = FAMILY_RANGES[family]
    injectors = []

    if app_kind == "OcclusionFlip":
        mag = float(rng.uniform(*ranges["OcclusionFlip"]))
        want = max(2, int(round(mag * 24)))
        scene, (a0, b0, i, j) = _scene_for_flip(clip_seed, resolution, want)
        a = a0
        b = min(a0 + want - 1, 23)
        injectors.append(Injector(kind="OcclusionFlip", magnitude=(b - a + 1) / 24,
                                  frames=(a, b), sprite=i, sprite2=j,
                                  family=family, seed=int(rng.integers(2 ** 31))))
    else:
        scene = make_scene(int(rng.integers(2 ** 31)), resolution=resolution)
        length = int(rng.integers(14, 21))
        a = int(rng.integers(0, 24 - length))
        injectors.append(Injector(
            kind="AppearanceFlicker",
            magnitude=float(rng.uniform(*ranges["AppearanceFlicker"])),
            frames=(a, a + length - 1),
            sprite=_largest_sprite(scene),
            family=family, seed=int(rng.integers(2 ** 31))))

    length = int(rng.integers(14, 21))
    a = int(rng.integers(0, 24 - length))
    injectors.append(Injector(
        kind=mg_kind,
        magnitude=float(rng.uniform(*ranges[mg_kind])),
        frames=(a, a + length - 1),
        sprite=int(rng.integers(0, len(scene.sprites))),
        family=family, seed=int(rng.integers(2 ** 31))))

    frames, gt = apply_injectors(scene, injectors)
    return frames, gt


def build_corpus(cfg: CorpusConfig) -> Path:
    """Generate all clips and write the manifest; returns the manifest path."""
    out = cfg.out_dir
    (out / "clips").mkdir(parents=True, exist_ok=True)
    split_code = {"train": 0, "val": 1, "test": 2}
    counts = {"train": cfg.n_train, "val": cfg.n_val, "test": cfg.n_test}
    entries = []
    for split in SPLITS:
        for i in range(counts[split]):
            for label_code, label in ((0, "real"), (1, "fake")):
                clip_seed = [cfg.seed, split_code[split], i, label_code]
                cid = f"{cfg.family}-{split}-{label}-{i:04d}"
                if label == "real":
                    rng = np.random.default_rng(clip_seed)
                    scene = make_scene(int(rng.integers(2 ** 31)),
                                       resolution=cfg.resolution)
                    frames, gt = generate_scene(scene)
                else:
                    frames, gt = _make_fake(clip_seed, cfg.family,
                                            cfg.resolution)

                frames_rel = f"clips/{cid}.rgb8"
                save_frames_raw(out / frames_rel, frames)
                depth_rel = f"clips/{cid}.depth.cvrt"
                write_cvrt(out / depth_rel, gt.depth)
                flow_rel = f"clips/{cid}.flow.cvrt"
                write_cvrt(out / flow_rel, gt.flow)
                mask_rel = None
                if gt.mask is not None:
                    mask_rel = f"clips/{cid}.mask.cvrt"
                    write_cvrt(out / mask_rel, gt.mask)
                entries.append({
                    "id": cid,
                    "label": label,
                    "family": cfg.family,
                    "split": split,
                    "frames_path": frames_rel,
                    "gt": {"depth": depth_rel, "flow": flow_rel,
                           "mask": mask_rel},
                    "injectors": [inj.to_json() for inj in gt.injectors],
                })
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(entries, sort_keys=True, indent=1) + "\n")
    return manifest_path


def load_manifest(path) -> tuple[list[dict], Path]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest {path} does not exist")
    try:
        entries = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"manifest {path} is not valid JSON: {e}") from None
    if not isinstance(entries, list):
        raise DataError(f"manifest {path} must be a JSON array")
    return entries, path.parent


def corpus_fingerprint(manifest_path) -> str:
    return hashlib.sha256(Path(manifest_path).read_bytes()).hexdigest()
