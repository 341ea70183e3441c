"""Logit fusion, decision rules (including the epsilon boundary), calibration."""
import itertools
import math

import numpy as np
import pytest

from cvrdetect.ensemble import (DetectorConfig, EnsembleWeights, ModalityLogits,
                                balanced_accuracy, calibrate_weights,
                                decide_clip, decide_video, fuse_logits,
                                load_weights, save_weights)
from cvrdetect.errors import DataError


class TestFuseLogits:
    def test_single_expert_projection(self):
        l = ModalityLogits(l_a=0.7, l_m=-2.0, l_g=3.1)
        w = EnsembleWeights(1, 0, 0)
        assert fuse_logits(l, w) == pytest.approx(0.7)

    def test_uniform_average(self):
        l = ModalityLogits(l_a=0.6, l_m=-0.3, l_g=0.9)
        w = EnsembleWeights(1 / 3, 1 / 3, 1 / 3)
        assert fuse_logits(l, w) == pytest.approx(0.4)

    def test_scaling_weights_scales_logit_not_decision(self):
        l = ModalityLogits(l_a=0.6, l_m=-0.3, l_g=0.9)
        w1 = EnsembleWeights(0.2, 0.3, 0.5)
        w10 = EnsembleWeights(2.0, 3.0, 5.0)
        f1, f10 = fuse_logits(l, w1), fuse_logits(l, w10)
        assert f10 == pytest.approx(10 * f1)
        assert decide_clip(f1) == decide_clip(f10)

    def test_linear_in_each_logit(self):
        w = EnsembleWeights(0.5, 0.25, 0.25)
        base = fuse_logits(ModalityLogits(1.0, 2.0, -1.0), w)
        bumped = fuse_logits(ModalityLogits(1.0 + 2.0, 2.0, -1.0), w)
        assert bumped - base == pytest.approx(0.5 * 2.0)

    def test_positive_weight_on_absent_modality_rejected(self):
        l = ModalityLogits(l_a=0.7, l_m=None, l_g=None)
        with pytest.raises(DataError):
            fuse_logits(l, EnsembleWeights(0.5, 0.5, 0.0))

    def test_absent_modality_with_zero_weight_ok(self):
        l = ModalityLogits(l_a=0.7, l_m=None, l_g=None)
        assert fuse_logits(l, EnsembleWeights(1.0, 0.0, 0.0)) == pytest.approx(0.7)

    def test_all_absent_rejected(self):
        with pytest.raises(DataError):
            ModalityLogits(None, None, None)


class TestDecideClip:
    def test_small_positive_is_fake(self):
        assert decide_clip(0.01) == "fake"

    def test_exact_zero_is_real(self):
        assert decide_clip(0.0) == "real"

    def test_negative_is_real(self):
        assert decide_clip(-5.0) == "real"

    def test_nonfinite_rejected(self):
        with pytest.raises(DataError):
            decide_clip(float("nan"))


class TestDecideVideo:
    def test_three_of_forty_exceeds_epsilon(self):
        labels = ["fake"] * 3 + ["real"] * 37
        verdict, frac = decide_video(labels, DetectorConfig(epsilon=0.05))
        assert frac == pytest.approx(0.075)
        assert verdict == "fake"

    def test_two_of_forty_is_exactly_epsilon_hence_real(self):
        labels = ["fake"] * 2 + ["real"] * 38
        verdict, frac = decide_video(labels, DetectorConfig(epsilon=0.05))
        assert verdict == "real"  # 0.05 does not strictly exceed 0.05

    @pytest.mark.parametrize("n", [1, 7, 40])
    def test_zero_fakes_always_real(self, n):
        verdict, frac = decide_video(["real"] * n, DetectorConfig())
        assert verdict == "real" and frac == 0.0

    def test_monotone_in_fake_count(self):
        cfg = DetectorConfig(epsilon=0.05)
        prev_fake = False
        for k in range(0, 41):
            verdict, _ = decide_video(["fake"] * k + ["real"] * (40 - k), cfg)
            is_fake = verdict == "fake"
            assert is_fake or not prev_fake  # never flips fake -> real
            prev_fake = is_fake

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            decide_video([], DetectorConfig())


def oracle_grid_argmax(mat, labels, active):
    """Independent exhaustive re-evaluation of the calibration objective over
    the 0.05 lattice plus the exact uniform centroid."""
    active_set = set(active)
    points = []
    for i, j in itertools.product(range(21), range(21)):
        k = 20 - i - j
        if k >= 0:
            points.append((i / 20, j / 20, k / 20))
    if len(active_set) == 3:
        points.append((1 / 3, 1 / 3, 1 / 3))
    candidates = []
    for wa, wm, wg in points:
        w = {"a": wa, "m": wm, "g": wg}
        if any(w[key] > 0 and key not in active_set for key in ("a", "m", "g")):
            continue
        fused = mat @ np.array([wa, wm, wg])
        pred = fused > 0
        pos, neg = labels == 1, labels == 0
        acc = 0.5 * (pred[pos].mean() + (~pred[neg]).mean())
        ent = -sum(p * math.log(p) for p in (wa, wm, wg) if p > 0)
        candidates.append(((acc, ent, (-wa, -wm, -wg)), (wa, wm, wg)))
    return max(candidates)[1]


class TestCalibrate:
    def test_informative_modality_gets_max_weight(self):
        rng = np.random.default_rng(0)
        n = 60
        labels = np.array([0, 1] * (n // 2))
        informative = np.where(labels == 1, 2.0, -2.0) + rng.normal(0, 0.2, n)
        noise1 = rng.normal(0, 4.0, n)
        noise2 = rng.normal(0, 4.0, n)
        logits = [ModalityLogits(float(informative[i]), float(noise1[i]),
                                 float(noise2[i])) for i in range(n)]
        w = calibrate_weights(logits, labels)
        mat = np.array([[l.l_a, l.l_m, l.l_g] for l in logits])
        oracle = oracle_grid_argmax(mat, labels, ("a", "m", "g"))
        assert w.as_tuple() == pytest.approx(oracle)
        assert w.alpha_a == max(w.as_tuple())

    def test_identical_logits_tie_break_uniform(self):
        labels = np.array([0, 1] * 10)
        vals = np.where(labels == 1, 1.5, -1.5)
        logits = [ModalityLogits(float(v), float(v), float(v)) for v in vals]
        w = calibrate_weights(logits, labels)
        assert w.as_tuple() == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_empty_validation_defaults_uniform_with_warning(self):
        with pytest.warns(UserWarning):
            w = calibrate_weights([], [])
        assert w.as_tuple() == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_single_class_rejected(self):
        logits = [ModalityLogits(1.0, 1.0, 1.0)] * 4
        with pytest.raises(DataError):
            calibrate_weights(logits, [1, 1, 1, 1])

    def test_restricted_modalities(self):
        labels = np.array([0, 1] * 20)
        rng = np.random.default_rng(1)
        good = np.where(labels == 1, 1.0, -1.0)
        logits = [ModalityLogits(float(good[i] + rng.normal(0, 0.1)),
                                 float(rng.normal(0, 3)), None)
                  for i in range(40)]
        w = calibrate_weights(logits, labels, modalities=("a", "m"))
        assert w.alpha_g == 0.0
        mat = np.array([[l.l_a, l.l_m, 0.0] for l in logits])
        oracle = oracle_grid_argmax(mat, labels, ("a", "m"))
        assert w.as_tuple() == pytest.approx(oracle)

    def test_enabled_but_absent_modality_rejected(self):
        logits = [ModalityLogits(1.0, None, None)]
        with pytest.raises(DataError):
            calibrate_weights(logits, [1], modalities=("a", "m"))


class TestWeightsFile:
    def test_round_trip(self, tmp_path):
        w = EnsembleWeights(0.5, 0.3, 0.2)
        p = tmp_path / "w.json"
        save_weights(p, w, epsilon=0.07, calibration_manifest="abc123")
        back, eps, manifest = load_weights(p)
        assert back.as_tuple() == pytest.approx(w.as_tuple())
        assert eps == 0.07
        assert manifest == "abc123"

    def test_bad_file_rejected(self, tmp_path):
        p = tmp_path / "w.json"
        p.write_text('{"alpha_a": 1.0}')
        with pytest.raises(DataError):
            load_weights(p)


def test_balanced_accuracy_definition():
    pred = np.array([True, True, False, False, True])
    labels = np.array([1, 0, 0, 1, 1])
    # tpr = 2/3, tnr = 1/2
    assert balanced_accuracy(pred, labels) == pytest.approx(0.5 * (2 / 3 + 1 / 2))
