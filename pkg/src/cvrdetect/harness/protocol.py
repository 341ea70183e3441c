"""Training + evaluation protocols: in-domain and cross-family, with the
expert-combination ablation rows (A, A+M, A+G, A+M+G)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..classifier import (ConvNet3D, TrainConfig, build_model, load_checkpoint,
                          save_checkpoint, train)
from ..corpus import corpus_fingerprint
from ..ensemble import (DetectorConfig, EnsembleWeights, ModalityLogits,
                        calibrate_weights)
from ..errors import DataError
from .cache import WORKING_HW, cached_split_logits, clip_volume
from .evaluate import (KEY_BY_MODALITY, MODALITY_BY_KEY, EvalReport, evaluate,
                       split_entries)

ROWS = (("A",), ("A", "M"), ("A", "G"), ("A", "M", "G"))
ROW_KEYS = {"A": "a", "M": "m", "G": "g"}
MODALITIES = ("appearance", "flow", "depth")


def row_name(row: tuple[str, ...]) -> str:
    return "+".join(row)


@dataclass
class ProtocolConfig:
    manifest_a: Path
    manifest_b: Path | None = None
    out_dir: Path = Path("runs")
    seed: int = 0
    epochs: int = 100
    lr: float = 1e-4
    batch_size: int = 20
    epsilon: float = 0.05
    working_hw: tuple[int, int] = WORKING_HW
    reuse_checkpoints: bool = True


def checkpoint_path(cfg: ProtocolConfig, modality: str) -> Path:
    return Path(cfg.out_dir) / f"{modality}_seed{cfg.seed}.ckpt"


def train_expert(cfg: ProtocolConfig, modality: str) -> ConvNet3D:
    """Train one modality expert on the family-A train split (or reuse)."""
    path = checkpoint_path(cfg, modality)
    if cfg.reuse_checkpoints and path.exists():
        return load_checkpoint(path)
    entries = split_entries(cfg.manifest_a, "train")
    base = Path(cfg.manifest_a).parent
    dataset = []
    for e in entries:
        vol = clip_volume(e, base, modality, cfg.working_hw)
        dataset.append((vol, 1 if e["label"] == "fake" else 0))
    in_channels = dataset[0][0].channels
    model = build_model(modality, in_channels, input_hw=cfg.working_hw,
                        seed=cfg.seed)
    model.corpus_fingerprint = corpus_fingerprint(cfg.manifest_a)
    tc = TrainConfig(lr=cfg.lr, batch_size=cfg.batch_size, epochs=cfg.epochs,
                     seed=cfg.seed)
    model, history = train(model, dataset, tc)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, path)
    hist_path = path.with_suffix(".history.json")
    hist_path.write_text(json.dumps(
        [{"epoch": h.epoch, "loss": h.loss, "train_acc": h.train_acc,
          "val_acc": h.val_acc} for h in history], indent=1))
    return model


def train_all(cfg: ProtocolConfig) -> dict[str, ConvNet3D]:
    return {m: train_expert(cfg, m) for m in MODALITIES}


def val_logits(cfg: ProtocolConfig, experts: dict[str, ConvNet3D]):
    entries = split_entries(cfg.manifest_a, "val")
    labels = [1 if e["label"] == "fake" else 0 for e in entries]
    mats = {m: cached_split_logits(cfg.manifest_a, entries, "val", m, experts[m],
                                   cfg.working_hw)
            for m in experts}
    logits = [ModalityLogits(l_a=float(mats["appearance"][i]),
                             l_m=float(mats["flow"][i]),
                             l_g=float(mats["depth"][i]))
              for i in range(len(entries))]
    return logits, labels


def calibrate_row(logits, labels, row: tuple[str, ...]) -> EnsembleWeights:
    keys = tuple(ROW_KEYS[r] for r in row)
    return calibrate_weights(logits, labels, modalities=keys)


def run_protocol(protocols: tuple[str, ...], cfg: ProtocolConfig) -> dict:
    """Train experts once, calibrate each ablation row on family-A val, then
    evaluate the requested protocols. Returns a nested result dict."""
    for p in protocols:
        if p not in ("in_domain", "cross_family"):
            raise DataError(f"unknown protocol {p!r}")
    if "cross_family" in protocols and cfg.manifest_b is None:
        raise DataError("cross_family protocol needs manifest_b")

    experts = train_all(cfg)
    logits, labels = val_logits(cfg, experts)
    row_weights = {row: calibrate_row(logits, labels, row) for row in ROWS}

    results: dict = {"seed": cfg.seed, "rows": {}}
    detector = DetectorConfig(epsilon=cfg.epsilon)
    for row in ROWS:
        name = row_name(row)
        weights = row_weights[row]
        used = {MODALITY_BY_KEY[k]: experts[MODALITY_BY_KEY[k]]
                for k in (ROW_KEYS[r] for r in row)}
        entry = {"weights": weights.as_tuple()}
        if "in_domain" in protocols:
            entry["in_domain"] = evaluate(
                cfg.manifest_a, "test", used, weights, detector,
                seed=cfg.seed, working_hw=cfg.working_hw)
        if "cross_family" in protocols:
            entry["cross_family"] = evaluate(
                cfg.manifest_b, "test", used, weights, detector,
                seed=cfg.seed, working_hw=cfg.working_hw)
        results["rows"][name] = entry
    return results
