"""End-to-end detection on one input video (frames dir or raw RGB8 file)."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..classifier import ConvNet3D, predict_logits
from ..cvr import (ModalityVolume, ShortVideoWarning, extract_appearance_proxy,
                   extract_flow, load_depth, load_frames, read_cvrt,
                   segment_clips)
from ..ensemble import (DetectorConfig, EnsembleWeights, decide_clip,
                        decide_video)
from ..errors import DataError
from ..gradcam import compute_gradcam, export_heatmap_frames
from .cache import WORKING_HW
from .evaluate import KEY_BY_MODALITY


@dataclass
class ClipVerdict:
    index: int
    fused_logit: float
    label: str
    modality_logits: dict


@dataclass
class DetectResult:
    verdict: str                  # real | fake | insufficient-frames
    fake_fraction: float
    n_clips: int
    clips: list[ClipVerdict] = field(default_factory=list)
    heatmap_dirs: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "fake_fraction": self.fake_fraction,
            "n_clips": self.n_clips,
            "clips": [{"index": c.index, "fused_logit": c.fused_logit,
                       "label": c.label, "modality_logits": c.modality_logits}
                      for c in self.clips],
            "heatmap_dirs": self.heatmap_dirs,
        }


def _clip_volumes(clips, modality: str, working_hw, override_path):
    if override_path is not None:
        if len(clips) != 1:
            raise DataError(
                "an external volume override applies to single-clip inputs only")
        return [ModalityVolume(modality, read_cvrt(override_path))]
    if modality == "appearance":
        return [extract_appearance_proxy(c, grid=working_hw) for c in clips]
    if modality == "flow":
        return [extract_flow(c, target_size=working_hw) for c in clips]
    raise DataError(
        "depth volumes must be supplied externally (depth_cvrt) for detection")


def detect(input_path, experts: dict[str, ConvNet3D], weights: EnsembleWeights,
           config: DetectorConfig | None = None,
           working_hw: tuple[int, int] = WORKING_HW,
           appearance_cvrt=None, flow_cvrt=None, depth_cvrt=None,
           gradcam_dir=None, gradcam_top_k: int = 1,
           gradcam_layer: str = "block3") -> DetectResult:
    """Segment, score, fuse, and vote on one input video."""
    cfg = config or DetectorConfig()
    for key, modality in (("a", "appearance"), ("m", "flow"), ("g", "depth")):
        if weights.get(key) > 0 and modality not in experts:
            raise DataError(
                f"weights give alpha_{key} > 0 but no {modality} checkpoint loaded")

    video = load_frames(input_path)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ShortVideoWarning)
        clips = segment_clips(video, cfg.clip_len)
    if not clips:
        return DetectResult(verdict="insufficient-frames", fake_fraction=0.0,
                            n_clips=0)

    overrides = {"appearance": appearance_cvrt, "flow": flow_cvrt,
                 "depth": depth_cvrt}
    logits = {}
    volumes = {}
    for modality, model in experts.items():
        if modality == "depth" and overrides["depth"] is None:
            raise DataError(
                "depth expert enabled but no depth volume provided "
                "(pass depth_cvrt)")
        vols = _clip_volumes(clips, modality, working_hw, overrides[modality])
        volumes[modality] = vols
        logits[modality] = predict_logits(model, vols)

    clip_verdicts = []
    for i in range(len(clips)):
        mod_logits = {m: float(logits[m][i]) for m in experts}
        fused = sum(weights.get(KEY_BY_MODALITY[m]) * l
                    for m, l in mod_logits.items())
        clip_verdicts.append(ClipVerdict(
            index=i, fused_logit=fused, label=decide_clip(fused, cfg),
            modality_logits=mod_logits))

    verdict, frac = decide_video([c.label for c in clip_verdicts], cfg)
    result = DetectResult(verdict=verdict, fake_fraction=frac,
                          n_clips=len(clips), clips=clip_verdicts)

    if gradcam_dir is not None:
        ranked = sorted(clip_verdicts, key=lambda c: -c.fused_logit)
        for c in ranked[:gradcam_top_k]:
            for modality, model in experts.items():
                hm = compute_gradcam(model, volumes[modality][c.index],
                                     target_layer=gradcam_layer)
                out = Path(gradcam_dir) / f"clip{c.index:03d}_{modality}"
                export_heatmap_frames(hm, clips[c.index], out)
                result.heatmap_dirs.append(str(out))
    return result
