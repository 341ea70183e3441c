"""Split evaluation: per-clip expert logits, fusion, clip and video decisions,
confusion counts (fake = positive)."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..classifier import ConvNet3D
from ..corpus import corpus_fingerprint, load_manifest
from ..ensemble import (DetectorConfig, EnsembleWeights, decide_clip,
                        decide_video)
from ..errors import DataError
from .cache import WORKING_HW, cached_split_logits, model_fingerprint

MODALITY_BY_KEY = {"a": "appearance", "m": "flow", "g": "depth"}
KEY_BY_MODALITY = {v: k for k, v in MODALITY_BY_KEY.items()}


@dataclass
class VideoResult:
    id: str
    label: str
    family: str
    verdict: str
    fake_fraction: float
    fused_logits: list[float]
    modality_logits: dict


@dataclass
class EvalReport:
    split: str
    video_accuracy: float
    clip_accuracy: float
    counts: dict                      # tp/fp/tn/fn over videos
    per_source: dict                  # family -> accuracy
    videos: list[VideoResult]
    weights: dict
    epsilon: float
    seed: int
    manifest_fingerprint: str
    checkpoint_fingerprints: dict

    def to_json(self) -> dict:
        return {
            "split": self.split,
            "video_accuracy": self.video_accuracy,
            "clip_accuracy": self.clip_accuracy,
            "counts": self.counts,
            "per_source": self.per_source,
            "weights": self.weights,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "manifest_fingerprint": self.manifest_fingerprint,
            "checkpoint_fingerprints": self.checkpoint_fingerprints,
            "videos": [
                {"id": v.id, "label": v.label, "family": v.family,
                 "verdict": v.verdict, "fake_fraction": v.fake_fraction,
                 "fused_logits": v.fused_logits,
                 "modality_logits": v.modality_logits}
                for v in self.videos
            ],
        }


def split_entries(manifest_path, split: str) -> list[dict]:
    entries, _ = load_manifest(manifest_path)
    out = [e for e in entries if e["split"] == split]
    if not out:
        raise DataError(f"split {split!r} not present in {manifest_path}")
    return out


def check_balance(entries: list[dict], allow_imbalanced: bool) -> None:
    fake = sum(1 for e in entries if e["label"] == "fake")
    ratio = fake / len(entries)
    if not (0.4 <= ratio <= 0.6) and not allow_imbalanced:
        raise DataError(
            f"split class ratio {ratio:.2f} outside [0.4, 0.6]; "
            "pass allow_imbalanced to report anyway")


def evaluate_from_logits(entries: list[dict], logit_mat: dict,
                         weights: EnsembleWeights,
                         config: DetectorConfig | None = None,
                         split: str = "test", seed: int = 0,
                         manifest_fingerprint: str = "",
                         checkpoint_fingerprints: dict | None = None) -> EvalReport:
    """Aggregate per-clip expert logits into a full report (pure function)."""
    cfg = config or DetectorConfig()
    for modality in logit_mat:
        if KEY_BY_MODALITY.get(modality) is None:
            raise DataError(f"unknown expert modality {modality!r}")
    for key, modality in MODALITY_BY_KEY.items():
        if weights.get(key) > 0 and modality not in logit_mat:
            raise DataError(
                f"weights give alpha_{key} > 0 but no {modality} expert loaded")

    videos = []
    tp = fp = tn = fn = 0
    clip_hits = clip_total = 0
    per_source_hits: dict[str, list[int]] = {}
    for i, e in enumerate(entries):
        mod_logits = {m: float(logit_mat[m][i]) for m in logit_mat}
        fused = sum(weights.get(KEY_BY_MODALITY[m]) * l
                    for m, l in mod_logits.items())
        clip_label = decide_clip(fused, cfg)
        verdict, frac = decide_video([clip_label], cfg)
        videos.append(VideoResult(
            id=e["id"], label=e["label"], family=e["family"], verdict=verdict,
            fake_fraction=frac, fused_logits=[fused],
            modality_logits=mod_logits))
        hit = verdict == e["label"]
        clip_hits += int(clip_label == e["label"])
        clip_total += 1
        per_source_hits.setdefault(e["family"], []).append(int(hit))
        if e["label"] == "fake":
            tp += int(hit)
            fn += int(not hit)
        else:
            tn += int(hit)
            fp += int(not hit)

    total = len(entries)
    return EvalReport(
        split=split,
        video_accuracy=(tp + tn) / total,
        clip_accuracy=clip_hits / clip_total,
        counts={"tp": tp, "fp": fp, "tn": tn, "fn": fn, "total": total},
        per_source={k: float(np.mean(v)) for k, v in sorted(per_source_hits.items())},
        videos=videos,
        weights={"alpha_a": weights.alpha_a, "alpha_m": weights.alpha_m,
                 "alpha_g": weights.alpha_g},
        epsilon=cfg.epsilon,
        seed=seed,
        manifest_fingerprint=manifest_fingerprint,
        checkpoint_fingerprints=checkpoint_fingerprints or {},
    )


def evaluate(manifest_path, split: str, experts: dict[str, ConvNet3D],
             weights: EnsembleWeights, config: DetectorConfig | None = None,
             allow_imbalanced: bool = False, seed: int = 0,
             working_hw: tuple[int, int] = WORKING_HW) -> EvalReport:
    """Evaluate fused experts on one split; experts keys are modality names."""
    entries = split_entries(manifest_path, split)
    check_balance(entries, allow_imbalanced)
    logit_mat = {}
    for modality, model in experts.items():
        if KEY_BY_MODALITY.get(modality) is None:
            raise DataError(f"unknown expert modality {modality!r}")
        logit_mat[modality] = cached_split_logits(
            manifest_path, entries, split, modality, model, working_hw)
    return evaluate_from_logits(
        entries, logit_mat, weights, config, split=split, seed=seed,
        manifest_fingerprint=corpus_fingerprint(manifest_path),
        checkpoint_fingerprints={m: model_fingerprint(mod)
                                 for m, mod in sorted(experts.items())})
