"""FastAPI service wrapping the detection pipeline.

Errors map to structured JSON: {"kind": "data"|"numeric"|"usage", "message"}
so clients (the CLI included) can translate them into exit codes.
"""
from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..classifier import load_checkpoint
from ..corpus import CorpusConfig, build_corpus, corpus_fingerprint, load_manifest
from ..cvr import (extract_appearance_proxy, extract_flow, load_frames,
                   read_cvrt, write_cvrt)
from ..ensemble import (DetectorConfig, EnsembleWeights, load_weights,
                        save_weights)
from ..errors import CvrDetectError, DataError, NumericError
from ..gradcam import compute_gradcam, export_heatmap_frames, localization_score
from ..harness import (ProtocolConfig, clip_volume, detect, evaluate,
                       protocol_results_json, render_protocol_table,
                       run_protocol, val_logits, write_report)
from ..harness.protocol import MODALITIES, train_expert
from . import schemas

app = FastAPI(title="cvrdetect", version=__version__)


@app.exception_handler(DataError)
def _data_error(request, exc):
    return JSONResponse(status_code=422,
                        content={"kind": "data", "message": str(exc)})


@app.exception_handler(NumericError)
def _numeric_error(request, exc):
    return JSONResponse(status_code=500,
                        content={"kind": "numeric", "message": str(exc)})


@app.exception_handler(FileNotFoundError)
def _missing_file(request, exc):
    return JSONResponse(status_code=422,
                        content={"kind": "data", "message": str(exc)})


@app.exception_handler(CvrDetectError)
def _other_error(request, exc):
    return JSONResponse(status_code=400,
                        content={"kind": "usage", "message": str(exc)})


@app.get("/healthz")
def healthz():
    return {"status": "ok", "version": __version__}


@app.post("/v1/synth", response_model=schemas.SynthResponse)
def synth(req: schemas.SynthRequest):
    cfg = CorpusConfig(out_dir=Path(req.out_dir), family=req.family,
                       n_train=req.n_train, n_test=req.n_test, n_val=req.n_val,
                       seed=req.seed, resolution=req.resolution)
    manifest = build_corpus(cfg)
    entries, _ = load_manifest(manifest)
    return schemas.SynthResponse(manifest=str(manifest), n_entries=len(entries),
                                 fingerprint=corpus_fingerprint(manifest))


@app.post("/v1/extract", response_model=schemas.ExtractResponse)
def extract(req: schemas.ExtractRequest):
    clip = load_frames(req.frames)
    if req.modality == "appearance":
        vol = extract_appearance_proxy(clip, grid=req.size or (32, 32))
    else:
        vol = extract_flow(clip, target_size=req.size)
    write_cvrt(req.out, vol.tensor)
    return schemas.ExtractResponse(out=req.out, dims=list(vol.tensor.shape))


@app.post("/v1/train", response_model=schemas.TrainResponse)
def train_endpoint(req: schemas.TrainRequest):
    from ..classifier import TrainConfig, build_model, save_checkpoint, train
    from ..harness.evaluate import split_entries

    entries = split_entries(req.manifest, "train")
    base = Path(req.manifest).parent
    dataset = [(clip_volume(e, base, req.modality), 1 if e["label"] == "fake" else 0)
               for e in entries]
    model = build_model(req.modality, dataset[0][0].channels, seed=req.seed)
    model.corpus_fingerprint = corpus_fingerprint(req.manifest)
    model, history = train(model, dataset, TrainConfig(
        lr=req.lr, batch_size=req.batch, epochs=req.epochs, seed=req.seed))
    out = Path(req.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, out)
    val_accs = [h.val_acc for h in history if h.val_acc == h.val_acc]
    return schemas.TrainResponse(
        checkpoint=str(out), best_epoch=model.epoch, epochs_run=len(history),
        final_train_acc=history[-1].train_acc,
        best_val_acc=max(val_accs) if val_accs else None)


def _load_experts(ckpt: schemas.CkptSet) -> dict:
    paths = {"appearance": ckpt.a, "flow": ckpt.m, "depth": ckpt.g}
    experts = {}
    for modality, p in paths.items():
        if p is not None:
            model = load_checkpoint(p)
            if model.modality != modality:
                raise DataError(
                    f"checkpoint {p} holds a {model.modality} model, "
                    f"expected {modality}")
            experts[modality] = model
    if not experts:
        raise DataError("at least one checkpoint is required")
    return experts


def _weights_for(req_weights, epsilon, experts) -> tuple[EnsembleWeights, float]:
    if req_weights is not None:
        w, eps, _ = load_weights(req_weights)
    else:
        key = {"appearance": "alpha_a", "flow": "alpha_m", "depth": "alpha_g"}
        vals = {"alpha_a": 0.0, "alpha_m": 0.0, "alpha_g": 0.0}
        for m in experts:
            vals[key[m]] = 1.0 / len(experts)
        w, eps = EnsembleWeights(**vals), 0.05
    if epsilon is not None:
        eps = epsilon
    return w, eps


@app.post("/v1/eval", response_model=schemas.EvalResponse)
def eval_endpoint(req: schemas.EvalRequest):
    experts = _load_experts(req.ckpt)
    weights, eps = _weights_for(req.weights, req.epsilon, experts)
    report = evaluate(req.manifest, req.split, experts, weights,
                      DetectorConfig(epsilon=eps),
                      allow_imbalanced=req.allow_imbalanced, seed=req.seed)
    files = write_report(report, req.report)
    return schemas.EvalResponse(
        video_accuracy=report.video_accuracy, clip_accuracy=report.clip_accuracy,
        counts=report.counts, per_source=report.per_source,
        report_files=[str(f) for f in files])


@app.post("/v1/calibrate", response_model=schemas.CalibrateResponse)
def calibrate_endpoint(req: schemas.CalibrateRequest):
    from ..ensemble import ModalityLogits, calibrate_weights
    from ..harness.cache import cached_split_logits
    from ..harness.evaluate import KEY_BY_MODALITY, split_entries

    experts = _load_experts(req.ckpt)
    entries = split_entries(req.manifest, req.split)
    labels = [1 if e["label"] == "fake" else 0 for e in entries]
    mats = {m: cached_split_logits(req.manifest, entries, req.split, m, model)
            for m, model in experts.items()}
    keys = tuple(sorted(KEY_BY_MODALITY[m] for m in experts))
    logits = []
    for i in range(len(entries)):
        kw = {"l_a": None, "l_m": None, "l_g": None}
        for m in experts:
            kw[f"l_{KEY_BY_MODALITY[m]}"] = float(mats[m][i])
        logits.append(ModalityLogits(**kw))
    w = calibrate_weights(logits, labels, modalities=keys)
    save_weights(req.out, w, epsilon=req.epsilon,
                 calibration_manifest=corpus_fingerprint(req.manifest))
    return schemas.CalibrateResponse(alpha_a=w.alpha_a, alpha_m=w.alpha_m,
                                     alpha_g=w.alpha_g, weights_file=req.out)


@app.post("/v1/gradcam", response_model=schemas.GradcamResponse)
def gradcam_endpoint(req: schemas.GradcamRequest):
    from ..gradcam import resample_mask

    model = load_checkpoint(req.ckpt)
    entries, base = load_manifest(req.manifest)
    matches = [e for e in entries if e["id"] == req.clip_id]
    if not matches:
        raise DataError(f"clip id {req.clip_id!r} not in manifest")
    entry = matches[0]
    volume = clip_volume(entry, base, model.modality)
    hm = compute_gradcam(model, volume, target_layer=req.layer)
    clip = load_frames(base / entry["frames_path"])
    files = export_heatmap_frames(hm, clip, req.out_dir)
    iou = None
    if entry["gt"].get("mask"):
        mask = read_cvrt(base / entry["gt"]["mask"])
        iou = localization_score(hm, resample_mask(mask, model.input_hw))
    return schemas.GradcamResponse(files=[str(f) for f in files], iou=iou)


@app.post("/v1/detect", response_model=schemas.DetectResponse)
def detect_endpoint(req: schemas.DetectRequest):
    experts = _load_experts(req.ckpt)
    weights, eps = _weights_for(req.weights, req.epsilon, experts)
    result = detect(req.input, experts, weights, DetectorConfig(epsilon=eps),
                    appearance_cvrt=req.appearance_cvrt,
                    flow_cvrt=req.flow_cvrt, depth_cvrt=req.depth_cvrt,
                    gradcam_dir=req.gradcam_dir,
                    gradcam_top_k=req.gradcam_top_k)
    return schemas.DetectResponse(**result.to_json())


@app.post("/v1/protocol", response_model=schemas.ProtocolResponse)
def protocol_endpoint(req: schemas.ProtocolRequest):
    cfg = ProtocolConfig(
        manifest_a=Path(req.manifest_a),
        manifest_b=Path(req.manifest_b) if req.manifest_b else None,
        out_dir=Path(req.out_dir), seed=req.seed, epochs=req.epochs,
        lr=req.lr, batch_size=req.batch, epsilon=req.epsilon)
    results = run_protocol(tuple(req.protocols), cfg)
    table = render_protocol_table(results)
    rj = protocol_results_json(results)
    out = Path(req.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"protocol_seed{req.seed}.json").write_text(rj)
    (out / f"protocol_seed{req.seed}.txt").write_text(table)
    return schemas.ProtocolResponse(table=table, results_json=rj,
                                    out_dir=str(out))
