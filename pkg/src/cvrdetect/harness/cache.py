"""Modality-volume and logit caches living beside the manifest.

Volume cache doubles as the external-feature ingestion point: any
[C,24,H,W] CVRT dropped at volumes/<id>.<modality>.cvrt (for example by an
external extractor) is used instead of the built-in proxy.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..classifier import ConvNet3D, predict_logits
from ..cvr import (ModalityVolume, extract_appearance_proxy, extract_flow,
                   load_depth, load_frames, read_cvrt, write_cvrt)
from ..errors import DataError

WORKING_HW = (32, 32)


def volumes_dir(manifest_path) -> Path:
    return Path(manifest_path).parent / "volumes"


def clip_volume(entry: dict, base_dir: Path, modality: str,
                working_hw: tuple[int, int] = WORKING_HW,
                cache_root: Path | None = None) -> ModalityVolume:
    """Volume for one manifest entry, cached as CVRT."""
    cid = entry["id"]
    cache_root = Path(cache_root) if cache_root else base_dir / "volumes"
    cache_path = cache_root / f"{cid}.{modality}.cvrt"
    if cache_path.exists():
        return ModalityVolume(modality, read_cvrt(cache_path))

    if modality == "appearance":
        clip = load_frames(base_dir / entry["frames_path"])
        vol = extract_appearance_proxy(clip, grid=working_hw)
    elif modality == "flow":
        clip = load_frames(base_dir / entry["frames_path"])
        vol = extract_flow(clip, target_size=working_hw)
    elif modality == "depth":
        depth_rel = entry.get("gt", {}).get("depth")
        if not depth_rel:
            raise DataError(f"clip {cid}: no depth source available")
        maps = read_cvrt(base_dir / depth_rel)
        vol = load_depth(maps, kind="metric", target_size=working_hw)
    else:
        raise DataError(f"unknown modality {modality!r}")

    cache_root.mkdir(parents=True, exist_ok=True)
    write_cvrt(cache_path, vol.tensor)
    return vol


def model_fingerprint(model: ConvNet3D) -> str:
    h = hashlib.sha256()
    h.update(model.modality.encode())
    for p in model.network.parameters():
        h.update(p.tobytes())
    if model.stats is not None:
        h.update(model.stats.mean.tobytes())
        h.update(model.stats.std.tobytes())
    return h.hexdigest()[:16]


def cached_split_logits(manifest_path, entries: list[dict], split: str,
                        modality: str, model: ConvNet3D,
                        working_hw: tuple[int, int] = WORKING_HW) -> np.ndarray:
    """Per-clip raw logits for a whole split, cached as CVRT beside the
    manifest so ablation rows reuse identical predictions."""
    base = Path(manifest_path).parent
    fp = model_fingerprint(model)
    cache_dir = base / "logit_cache"
    ids = [e["id"] for e in entries]
    tag = f"{split}.{modality}.{fp}"
    data_path = cache_dir / f"logits_{tag}.cvrt"
    ids_path = cache_dir / f"logits_{tag}.json"
    if data_path.exists() and ids_path.exists():
        if json.loads(ids_path.read_text()) == ids:
            return read_cvrt(data_path).astype(np.float64)

    volumes = [clip_volume(e, base, modality, working_hw) for e in entries]
    logits = predict_logits(model, volumes)
    cache_dir.mkdir(parents=True, exist_ok=True)
    write_cvrt(data_path, logits.astype(np.float32))
    ids_path.write_text(json.dumps(ids))
    return logits
