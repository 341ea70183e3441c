import json

import numpy as np
import pytest


def write_raw_clip(path, frames: np.ndarray) -> None:
    planar = np.ascontiguousarray(frames.transpose(0, 3, 1, 2))
    path.write_bytes(planar.tobytes())
    t, h, w = frames.shape[0], frames.shape[1], frames.shape[2]
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps({"t": t, "h": h, "w": w}))


def textured(h, w, seed=0):
    rng = np.random.default_rng(seed)
    base = rng.random((h // 4 + 2, w // 4 + 2))
    img = np.kron(base, np.ones((4, 4)))[:h, :w]
    img = 0.75 * img + 0.25 * rng.random((h, w))
    return img


@pytest.fixture
def shifting_clip(tmp_path):
    """26 frames translating by (2, 0) px/frame, written as raw RGB8."""
    h = w = 64
    pad = 60
    tex = textured(h + 2 * pad, w + 2 * pad, seed=3)
    frames = []
    for t in range(26):
        crop = tex[pad:pad + h, pad - 2 * t:pad - 2 * t + w]
        rgb = np.stack([crop, crop * 0.8 + 0.1, crop * 0.6 + 0.2], axis=-1)
        frames.append(np.round(rgb * 255).astype(np.uint8))
    frames = np.stack(frames)
    p = tmp_path / "clip.rgb8"
    write_raw_clip(p, frames)
    return p, frames


@pytest.fixture
def static_clip(tmp_path):
    h = w = 48
    img = (textured(h, w, seed=5) * 255).astype(np.uint8)
    frames = np.repeat(np.dstack([img] * 3)[None], 25, axis=0)
    p = tmp_path / "static.rgb8"
    write_raw_clip(p, frames)
    return p, frames
