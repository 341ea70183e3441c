"""Expert fusion: weighted logit sum per clip, threshold decisions, and
balanced-accuracy grid calibration of the fusion weights."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DataError

MODALITY_KEYS = ("a", "m", "g")  # appearance, motion, geometry
GRID_STEPS = 20                  # 0.05 resolution over the weight simplex


@dataclass(frozen=True)
class ModalityLogits:
    """Per-clip raw logits; None marks a disabled modality."""

    l_a: Optional[float] = None
    l_m: Optional[float] = None
    l_g: Optional[float] = None

    def __post_init__(self):
        vals = [v for v in (self.l_a, self.l_m, self.l_g) if v is not None]
        if not vals:
            raise DataError("at least one modality logit must be present")
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"non-finite logits: {self}")

    def get(self, key: str) -> Optional[float]:
        return {"a": self.l_a, "m": self.l_m, "g": self.l_g}[key]


@dataclass
class EnsembleWeights:
    alpha_a: float = 1 / 3
    alpha_m: float = 1 / 3
    alpha_g: float = 1 / 3

    def __post_init__(self):
        vals = (self.alpha_a, self.alpha_m, self.alpha_g)
        if any(v < 0 for v in vals):
            raise DataError(f"weights must be non-negative, got {vals}")
        if not any(v > 0 for v in vals):
            raise DataError("weights must not all be zero")

    def get(self, key: str) -> float:
        return {"a": self.alpha_a, "m": self.alpha_m, "g": self.alpha_g}[key]

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha_a, self.alpha_m, self.alpha_g)


@dataclass
class DetectorConfig:
    epsilon: float = 0.05      # video voting threshold
    clip_len: int = 25
    clip_threshold: float = 0.5

    def __post_init__(self):
        if not (0 <= self.epsilon < 1):
            raise DataError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if self.clip_len < 2:
            raise DataError(f"clip_len must be >= 2, got {self.clip_len}")


def fuse_logits(logits: ModalityLogits, w: EnsembleWeights) -> float:
    """l_final = alpha_a*l_a + alpha_m*l_m + alpha_g*l_g."""
    total = 0.0
    for key in MODALITY_KEYS:
        l = logits.get(key)
        alpha = w.get(key)
        if l is None:
            if alpha != 0:
                raise DataError(
                    f"positive weight on absent modality {key!r}")
            continue
        total += alpha * l
    return total


def decide_clip(l_final: float, config: DetectorConfig | None = None) -> str:
    """fake iff sigmoid(l_final) > 0.5, i.e. l_final > 0; exactly 0 -> real."""
    if not math.isfinite(l_final):
        raise DataError(f"non-finite fused logit {l_final}")
    return "fake" if l_final > 0.0 else "real"


def decide_video(clip_labels: Sequence[str],
                 config: DetectorConfig | None = None) -> tuple[str, float]:
    """fake iff the fake fraction strictly exceeds epsilon."""
    cfg = config or DetectorConfig()
    if not clip_labels:
        raise DataError("decide_video needs at least one clip label")
    n_fake = sum(1 for l in clip_labels if l == "fake")
    frac = n_fake / len(clip_labels)
    return ("fake" if frac > cfg.epsilon else "real"), frac


def _candidate_weights(active: Sequence[str]):
    """Simplex lattice at step 1/GRID_STEPS over the active modalities, plus
    the exact uniform centroid (the tie rule's target, off-lattice for three
    modalities since 20 is not divisible by 3)."""
    idx = {k: i for i, k in enumerate(MODALITY_KEYS)}
    active_idx = [idx[k] for k in active]
    if len(active_idx) == 1:
        w = [0.0, 0.0, 0.0]
        w[active_idx[0]] = 1.0
        yield tuple(w)
        return
    if len(active_idx) == 2:
        for i in range(GRID_STEPS + 1):
            w = [0.0, 0.0, 0.0]
            w[active_idx[0]] = i / GRID_STEPS
            w[active_idx[1]] = (GRID_STEPS - i) / GRID_STEPS
            yield tuple(w)
        return
    for i in range(GRID_STEPS + 1):
        for j in range(GRID_STEPS + 1 - i):
            yield (i / GRID_STEPS, j / GRID_STEPS,
                   (GRID_STEPS - i - j) / GRID_STEPS)
    yield (1 / 3, 1 / 3, 1 / 3)


def _entropy(w: Sequence[float]) -> float:
    total = sum(w)
    h = 0.0
    for x in w:
        if x > 0:
            p = x / total
            h -= p * math.log(p)
    return h


def balanced_accuracy(pred_fake: np.ndarray, labels: np.ndarray) -> float:
    pos = labels == 1
    neg = ~pos
    tpr = float(np.mean(pred_fake[pos])) if pos.any() else 0.0
    tnr = float(np.mean(~pred_fake[neg])) if neg.any() else 0.0
    return 0.5 * (tpr + tnr)


def calibrate_weights(clip_logits: Sequence[ModalityLogits],
                      labels: Sequence[int],
                      modalities: Sequence[str] = MODALITY_KEYS) -> EnsembleWeights:
    """Grid search (step 0.05) over the weight simplex maximizing balanced
    clip accuracy; ties break toward maximum entropy, then lexicographically.

    With no validation data, returns uniform weights with a warning.
    """
    if not clip_logits:
        warnings.warn("empty validation set; defaulting to uniform weights")
        return EnsembleWeights()
    labels = np.asarray(list(labels))
    if len(set(labels.tolist())) < 2:
        raise DataError("calibration needs both classes in the validation set")
    for key in modalities:
        if key not in MODALITY_KEYS:
            raise DataError(f"unknown modality key {key!r}")
        missing = [i for i, l in enumerate(clip_logits) if l.get(key) is None]
        if missing:
            raise DataError(
                f"modality {key!r} enabled but absent for clips {missing[:5]}")

    mat = np.array([[l.get(k) if l.get(k) is not None else 0.0
                     for k in MODALITY_KEYS] for l in clip_logits])
    best = None
    for w in _candidate_weights(modalities):
        fused = mat @ np.asarray(w, dtype=np.float64)
        acc = balanced_accuracy(fused > 0.0, labels)
        key = (acc, _entropy(w), tuple(-x for x in w))
        if best is None or key > best[0]:
            best = (key, w)
    w = best[1]
    return EnsembleWeights(alpha_a=w[0], alpha_m=w[1], alpha_g=w[2])


def save_weights(path, w: EnsembleWeights, epsilon: float = 0.05,
                 calibration_manifest: str = "") -> None:
    payload = {"alpha_a": w.alpha_a, "alpha_m": w.alpha_m, "alpha_g": w.alpha_g,
               "epsilon": epsilon, "calibration_manifest": calibration_manifest}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def load_weights(path) -> tuple[EnsembleWeights, float, str]:
    try:
        payload = json.loads(Path(path).read_text())
        w = EnsembleWeights(alpha_a=float(payload["alpha_a"]),
                            alpha_m=float(payload["alpha_m"]),
                            alpha_g=float(payload["alpha_g"]))
        return w, float(payload.get("epsilon", 0.05)), \
            payload.get("calibration_manifest", "")
    except (KeyError, ValueError, json.JSONDecodeError) as e:
        raise DataError(f"bad weights file {path}: {e}") from None
