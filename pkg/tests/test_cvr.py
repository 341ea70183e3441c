"""Clip segmentation, the appearance proxy, optical flow, depth loading and
per-channel normalization."""
import numpy as np
import pytest

from cvrdetect.cvr import (ChannelStats, FrameSequence, ModalityVolume,
                           ShortVideoWarning, compute_stats,
                           extract_appearance_proxy, extract_flow, flow_pair,
                           load_depth, load_frames, normalize_volume,
                           save_frames_png, save_frames_raw, segment_clips)
from cvrdetect.errors import DataError


def make_video(t, h=16, w=16, seed=0):
    rng = np.random.default_rng(seed)
    return FrameSequence(rng.integers(0, 256, size=(t, h, w, 3), dtype=np.uint8))


def textured_frame(h, w, seed=0):
    """Multi-octave random texture: gradients everywhere, resolvable at every
    pyramid level (the kind of pattern the flow contract is stated for)."""
    from scipy.ndimage import zoom
    rng = np.random.default_rng(seed)
    img = np.zeros((h, w))
    for cells, amp in [(9, 1.0), (17, 0.6), (33, 0.35)]:
        img += amp * zoom(rng.random((cells, cells)), (h / cells, w / cells),
                          order=3)[:h, :w]
    img = (img - img.min()) / (img.max() - img.min())
    return (img * 255).astype(np.uint8)


class TestSegmentClips:
    def test_exact_multiple(self):
        clips = segment_clips(make_video(100), clip_len=25)
        assert len(clips) == 4
        assert all(len(c) == 25 for c in clips)

    def test_remainder_dropped(self):
        clips = segment_clips(make_video(30), clip_len=25)
        assert len(clips) == 1
        v = make_video(30)
        np.testing.assert_array_equal(
            segment_clips(v, 25)[0].frames, v.frames[:25])

    def test_too_short_warns_and_returns_empty(self):
        with pytest.warns(ShortVideoWarning):
            clips = segment_clips(make_video(24), clip_len=25)
        assert clips == []

    @pytest.mark.parametrize("t", [1, 7, 25, 26, 49, 50, 51, 250])
    def test_count_is_floor_division(self, t):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ShortVideoWarning)
            assert len(segment_clips(make_video(t), 25)) == t // 25

    def test_bad_clip_len(self):
        with pytest.raises(DataError):
            segment_clips(make_video(10), clip_len=1)


class TestAppearanceProxy:
    def test_constant_gray_clip(self):
        frames = np.full((24, 16, 16, 3), 128, dtype=np.uint8)
        vol = extract_appearance_proxy(FrameSequence(frames), grid=(4, 4))
        assert vol.tensor.shape == (6, 24, 4, 4)
        np.testing.assert_allclose(vol.tensor[:3], 128 / 255.0, atol=1e-6)
        np.testing.assert_allclose(vol.tensor[3:], 0.0, atol=1e-6)

    def test_output_shape_contract(self):
        vol = extract_appearance_proxy(make_video(30, 32, 48), grid=(8, 8))
        assert vol.tensor.shape == (6, 24, 8, 8)
        assert vol.modality == "appearance"

    def test_vertical_step_edge_lights_up_horizontal_gradient(self):
        h = w = 32
        frame = np.zeros((h, w, 3), dtype=np.uint8)
        frame[:, w // 2:, :] = 255
        clip = FrameSequence(np.repeat(frame[None], 24, axis=0))
        vol = extract_appearance_proxy(clip, grid=(8, 8))
        gx = vol.tensor[4, 0]  # horizontal gradient channel, first frame

        # oracle: per-pixel central differences, averaged over each 4x4 cell
        intensity = frame.astype(np.float32).mean(axis=2) / 255.0
        _, ox = np.gradient(intensity)
        oracle = np.abs(ox).reshape(8, 4, 8, 4).mean(axis=(1, 3))
        np.testing.assert_allclose(gx, oracle, atol=1e-6)

        edge_cols = gx[:, 3:5]
        other_cols = np.concatenate([gx[:, :3], gx[:, 5:]], axis=1)
        assert edge_cols.min() > 10 * max(other_cols.max(), 1e-9)

    def test_per_frame_independence(self):
        v = make_video(25, 16, 16, seed=3)
        vol = extract_appearance_proxy(v, grid=(4, 4))
        swapped = FrameSequence(v.frames[[1, 0] + list(range(2, 25))])
        vol2 = extract_appearance_proxy(swapped, grid=(4, 4))
        np.testing.assert_array_equal(vol.tensor[:, 0], vol2.tensor[:, 1])
        np.testing.assert_array_equal(vol.tensor[:, 2:], vol2.tensor[:, 2:])

    def test_short_clip_rejected(self):
        with pytest.raises(DataError):
            extract_appearance_proxy(make_video(23), grid=(4, 4))


class TestFlow:
    def test_identical_frames_zero_flow(self):
        f = textured_frame(32, 32, seed=1).astype(np.float64) / 255.0
        field = flow_pair(f, f)
        np.testing.assert_array_equal(field, np.zeros_like(field))

    def test_reversed_identical_pair_zero(self):
        f = textured_frame(32, 32, seed=2).astype(np.float64) / 255.0
        np.testing.assert_array_equal(flow_pair(f, f), flow_pair(f, f))
        assert np.all(flow_pair(f, f) == 0)

    @pytest.mark.parametrize("shift", [(2, 0), (0, 3), (4, 0), (-2, 1)])
    def test_integer_translation_recovered(self, shift):
        dx, dy = shift
        pad = 8
        tex = textured_frame(64 + 2 * pad, 64 + 2 * pad, seed=5).astype(np.float64) / 255.0
        f0 = tex[pad:pad + 64, pad:pad + 64]
        f1 = tex[pad - dy:pad - dy + 64, pad - dx:pad - dx + 64]
        field = flow_pair(f0, f1)
        m = 10  # half-window border support at the coarsest level
        u = field[0, m:-m, m:-m]
        v = field[1, m:-m, m:-m]
        epe = np.sqrt((u - dx) ** 2 + (v - dy) ** 2).mean()
        assert epe < 0.5, f"mean EPE {epe:.3f} for shift {shift}"

    def test_extract_flow_shape_and_target_rescale(self):
        frames = np.stack([np.dstack([textured_frame(32, 32, seed=t)] * 3)
                           for t in range(25)])
        vol = extract_flow(FrameSequence(frames))
        assert vol.tensor.shape == (2, 24, 32, 32)
        vol16 = extract_flow(FrameSequence(frames), target_size=(16, 16))
        assert vol16.tensor.shape == (2, 24, 16, 16)

    def test_flat_frames_give_zero_without_blowup(self):
        frames = np.full((25, 16, 16, 3), 77, dtype=np.uint8)
        vol = extract_flow(FrameSequence(frames))
        np.testing.assert_array_equal(vol.tensor, 0)

    def test_short_clip_rejected(self):
        with pytest.raises(DataError):
            extract_flow(make_video(24))


class TestDepth:
    def test_metric_passthrough_bit_equal(self):
        rng = np.random.default_rng(4)
        maps = (rng.random((25, 8, 8)) * 10).astype(np.float32)
        vol = load_depth(maps, kind="metric")
        assert vol.tensor.shape == (1, 24, 8, 8)
        assert vol.tensor[0].tobytes() == maps[:24].tobytes()

    def test_relative_minmax(self):
        maps = np.linspace(2, 10, 24 * 4).astype(np.float32).reshape(24, 2, 2)
        vol = load_depth(maps, kind="relative")
        assert vol.tensor.min() == 0.0
        assert vol.tensor.max() == 1.0

    def test_metric_constant_not_rescaled(self):
        maps = np.full((24, 4, 4), 5.0, dtype=np.float32)
        vol = load_depth(maps, kind="metric")
        np.testing.assert_array_equal(vol.tensor, 5.0)

    def test_negative_metric_rejected(self):
        maps = np.full((24, 4, 4), -1.0, dtype=np.float32)
        with pytest.raises(DataError):
            load_depth(maps, kind="metric")

    def test_missing_frames_rejected(self):
        with pytest.raises(DataError):
            load_depth(np.zeros((10, 4, 4), dtype=np.float32))


class TestNormalize:
    def _vol(self, seed=0):
        rng = np.random.default_rng(seed)
        return ModalityVolume(
            "appearance",
            (rng.random((6, 24, 4, 4)) * 3 + 1).astype(np.float32))

    def test_identity_stats(self):
        vol = self._vol()
        stats = ChannelStats(np.zeros(6, np.float32), np.ones(6, np.float32))
        out = normalize_volume(vol, stats)
        np.testing.assert_array_equal(out.tensor, vol.tensor)

    def test_self_stats_center_and_scale(self):
        vols = [self._vol(s) for s in range(8)]
        stats = compute_stats([v.tensor for v in vols])
        normed = [normalize_volume(v, stats) for v in vols]
        recheck = compute_stats([v.tensor for v in normed])
        np.testing.assert_allclose(recheck.mean, 0.0, atol=1e-3)
        np.testing.assert_allclose(recheck.std, 1.0, atol=1e-3)

    def test_constant_channel_floored(self):
        vol = ModalityVolume("depth", np.full((1, 24, 4, 4), 2.5, np.float32))
        stats = compute_stats([vol.tensor])
        out = normalize_volume(vol, stats)
        assert np.all(np.isfinite(out.tensor))

    def test_channel_mismatch_rejected(self):
        vol = self._vol()
        stats = ChannelStats(np.zeros(2, np.float32), np.ones(2, np.float32))
        with pytest.raises(DataError):
            normalize_volume(vol, stats)


class TestFrameIO:
    def test_raw_round_trip(self, tmp_path):
        v = make_video(7, 10, 12, seed=9)
        p = tmp_path / "clip.rgb8"
        save_frames_raw(p, v)
        back = load_frames(p)
        np.testing.assert_array_equal(back.frames, v.frames)

    def test_png_round_trip(self, tmp_path):
        v = make_video(3, 8, 8, seed=10)
        save_frames_png(tmp_path / "clip", v)
        back = load_frames(tmp_path / "clip")
        np.testing.assert_array_equal(back.frames, v.frames)

    def test_missing_sidecar_rejected(self, tmp_path):
        p = tmp_path / "c.rgb8"
        p.write_bytes(bytes(300))
        with pytest.raises(DataError):
            load_frames(p)

    def test_wrong_payload_size_rejected(self, tmp_path):
        p = tmp_path / "c.rgb8"
        p.write_bytes(bytes(299))
        (tmp_path / "c.rgb8.json").write_text('{"t": 1, "h": 10, "w": 10}')
        with pytest.raises(DataError):
            load_frames(p)
