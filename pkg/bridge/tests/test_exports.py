"""Export machinery driven by stand-in backbones (no pretrained weights)."""
import json

import numpy as np
import pytest

from cvrbridge import (BridgeJob, export_appearance, export_depth, export_flow,
                       pool_to_grid, read_cvrt)


def fake_vit(frames):
    """[T,H,W,3] -> [C,T,h,w] deterministic per-frame features."""
    t = frames.shape[0]
    maps = []
    for i in range(t):
        img = frames[i].astype(np.float32).mean(axis=2) / 255.0
        c0 = img[::4, ::4]
        maps.append(np.stack([c0, c0 ** 2, np.gradient(c0)[0]]))
    return np.stack(maps, axis=1)


def fake_flow_2px(f0, f1):
    h, w = f0.shape[:2]
    field = np.zeros((2, h, w), dtype=np.float32)
    field[0] = 2.0
    return field


def fake_depth(frame):
    h, w = frame.shape[:2]
    return np.full((h, w), 5.0, dtype=np.float32)


class TestAppearance:
    def test_shape_contract_and_sidecar(self, shifting_clip, tmp_path):
        path, _ = shifting_clip
        job = BridgeJob(frames_path=path, modality="appearance",
                        out_path=tmp_path / "a.cvrt", target_hw=(8, 8))
        out = export_appearance(job, backbone=fake_vit)
        vol = read_cvrt(out)
        assert vol.shape == (3, 24, 8, 8)
        sidecar = json.loads((tmp_path / "a.cvrt.json").read_text())
        assert sidecar["modality"] == "appearance"
        assert sidecar["channels"] == 3
        # the sidecar's channel count fully determines the CVRT leading dim
        assert vol.shape[0] == sidecar["channels"]

    def test_duplicated_frames_identical_features(self, static_clip, tmp_path):
        path, _ = static_clip
        job = BridgeJob(frames_path=path, modality="appearance",
                        out_path=tmp_path / "s.cvrt", target_hw=(6, 6))
        out = export_appearance(job, backbone=fake_vit)
        vol = read_cvrt(out)
        diffs = np.abs(vol - vol[:, :1]).max()
        assert diffs < 1e-5

    def test_bad_backbone_shape_rejected(self, static_clip, tmp_path):
        path, _ = static_clip
        job = BridgeJob(frames_path=path, modality="appearance",
                        out_path=tmp_path / "b.cvrt")
        with pytest.raises(ValueError, match="backbone"):
            export_appearance(job, backbone=lambda f: np.zeros((3, 3)))


class TestFlow:
    def test_vectors_rescaled_to_target(self, shifting_clip, tmp_path):
        path, _ = shifting_clip
        job = BridgeJob(frames_path=path, modality="flow",
                        out_path=tmp_path / "f.cvrt", target_hw=(32, 32))
        out = export_flow(job, pair_fn=fake_flow_2px)
        vol = read_cvrt(out)
        assert vol.shape == (2, 24, 32, 32)
        # 2 px at 64 wide becomes 1 px at 32 wide
        np.testing.assert_allclose(vol[0], 1.0, atol=1e-6)
        np.testing.assert_allclose(vol[1], 0.0, atol=1e-6)

    def test_static_clip_near_zero(self, static_clip, tmp_path):
        path, _ = static_clip
        job = BridgeJob(frames_path=path, modality="flow",
                        out_path=tmp_path / "f0.cvrt", target_hw=(24, 24))
        out = export_flow(job, pair_fn=lambda a, b: np.zeros((2, 48, 48)))
        vol = read_cvrt(out)
        assert np.abs(vol).mean() < 0.1


class TestDepth:
    def test_metric_positive_contract(self, static_clip, tmp_path):
        path, _ = static_clip
        job = BridgeJob(frames_path=path, modality="depth_metric",
                        out_path=tmp_path / "d.cvrt", target_hw=(16, 16))
        out = export_depth(job, frame_fn=fake_depth)
        vol = read_cvrt(out)
        assert vol.shape == (1, 24, 16, 16)
        assert np.all(vol > 0)

    def test_constant_scene_temporally_stable(self, static_clip, tmp_path):
        path, _ = static_clip
        job = BridgeJob(frames_path=path, modality="depth_metric",
                        out_path=tmp_path / "d2.cvrt", target_hw=(16, 16))
        out = export_depth(job, frame_fn=fake_depth)
        vol = read_cvrt(out)[0]
        temporal_std = vol.std(axis=0)
        assert float(temporal_std.max()) < 0.05 * float(vol.mean())

    def test_nonpositive_metric_rejected(self, static_clip, tmp_path):
        path, _ = static_clip
        job = BridgeJob(frames_path=path, modality="depth_metric",
                        out_path=tmp_path / "d3.cvrt")
        with pytest.raises(ValueError, match="positive"):
            export_depth(job, frame_fn=lambda f: np.zeros(f.shape[:2],
                                                          dtype=np.float32))


class TestPooling:
    def test_integer_block_average(self):
        maps = np.arange(16, dtype=np.float32).reshape(1, 4, 4)
        out = pool_to_grid(maps, (2, 2))
        np.testing.assert_allclose(
            out[0], [[2.5, 4.5], [10.5, 12.5]])

    def test_upsamples_small_grids(self):
        maps = np.ones((2, 3, 3), dtype=np.float32)
        out = pool_to_grid(maps, (8, 8))
        assert out.shape == (2, 8, 8)
        np.testing.assert_allclose(out, 1.0)
