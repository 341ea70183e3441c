"""Request/response models for the detection service.

All paths are interpreted on the service host's filesystem; the CLI resolves
its arguments to absolute paths before sending.
"""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class SynthRequest(BaseModel):
    out_dir: str
    family: Literal["A", "B"]
    n_train: int = Field(ge=1)
    n_test: int = Field(ge=1)
    n_val: int = Field(default=0, ge=0)
    seed: int = 0
    resolution: int = Field(default=64, ge=32)


class SynthResponse(BaseModel):
    manifest: str
    n_entries: int
    fingerprint: str


class ExtractRequest(BaseModel):
    modality: Literal["appearance", "flow"]
    frames: str
    out: str
    size: Optional[tuple[int, int]] = None  # appearance grid / flow target


class ExtractResponse(BaseModel):
    out: str
    dims: list[int]


class TrainRequest(BaseModel):
    modality: Literal["appearance", "flow", "depth"]
    manifest: str
    out: str
    epochs: int = Field(default=100, ge=1)
    lr: float = Field(default=1e-4, gt=0)
    batch: int = Field(default=20, ge=1)
    seed: int = 0


class TrainResponse(BaseModel):
    checkpoint: str
    best_epoch: int
    epochs_run: int
    final_train_acc: float
    best_val_acc: Optional[float]


class CkptSet(BaseModel):
    a: Optional[str] = None  # appearance
    m: Optional[str] = None  # flow / motion
    g: Optional[str] = None  # depth / geometry


class EvalRequest(BaseModel):
    manifest: str
    split: str = "test"
    ckpt: CkptSet
    weights: Optional[str] = None       # weights JSON; default uniform over loaded
    report: str
    epsilon: Optional[float] = None     # overrides the weights-file value
    allow_imbalanced: bool = False
    seed: int = 0


class EvalResponse(BaseModel):
    video_accuracy: float
    clip_accuracy: float
    counts: dict
    per_source: dict
    report_files: list[str]


class CalibrateRequest(BaseModel):
    manifest: str
    split: str = "val"
    ckpt: CkptSet
    out: str
    epsilon: float = 0.05


class CalibrateResponse(BaseModel):
    alpha_a: float
    alpha_m: float
    alpha_g: float
    weights_file: str


class GradcamRequest(BaseModel):
    ckpt: str
    manifest: str
    clip_id: str
    layer: str = "block3"
    out_dir: str


class GradcamResponse(BaseModel):
    files: list[str]
    iou: Optional[float] = None


class DetectRequest(BaseModel):
    input: str
    ckpt: CkptSet
    weights: Optional[str] = None
    epsilon: float = 0.05
    appearance_cvrt: Optional[str] = None
    flow_cvrt: Optional[str] = None
    depth_cvrt: Optional[str] = None
    gradcam_dir: Optional[str] = None
    gradcam_top_k: int = 1


class ClipVerdictModel(BaseModel):
    index: int
    fused_logit: float
    label: str
    modality_logits: dict


class DetectResponse(BaseModel):
    verdict: str
    fake_fraction: float
    n_clips: int
    clips: list[ClipVerdictModel]
    heatmap_dirs: list[str]


class ProtocolRequest(BaseModel):
    manifest_a: str
    manifest_b: Optional[str] = None
    protocols: list[Literal["in_domain", "cross_family"]]
    out_dir: str
    seed: int = 0
    epochs: int = 100
    lr: float = 1e-4
    batch: int = 20
    epsilon: float = 0.05


class ProtocolResponse(BaseModel):
    table: str
    results_json: str
    out_dir: str
