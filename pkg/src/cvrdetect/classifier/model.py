"""Per-modality 3D ConvNet: fixed 4-block architecture ending in one raw logit.

Blocks 1-2 stride (1,2,2), blocks 3-4 stride (2,2,2); channels 16-32-64-128;
3x3x3 kernels, padding 1, ReLU after every conv; flatten, linear->64, ReLU,
linear->1. Sized so the temporal receptive field spans all 24 frames by the
last block at the 32x32 working resolution.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..cvr import CLIP_TIME, ChannelStats, ModalityVolume, normalize_volume
from ..errors import DataError
from ..nn import LayerSpec, Network, build_network, sigmoid, validate_chain

CONV_CHANNELS = (16, 32, 64, 128)
CONV_STRIDES = ((1, 2, 2), (1, 2, 2), (2, 2, 2), (2, 2, 2))
HIDDEN_FEATURES = 64

# conv block outputs (post-ReLU) addressable by Grad-CAM
BLOCK_LAYERS = {f"block{i}": f"relu{i}" for i in range(1, 5)}


def classifier_specs(in_channels: int, input_hw: tuple[int, int]) -> list[LayerSpec]:
    if in_channels < 1:
        raise DataError(f"in_channels must be >= 1, got {in_channels}")
    specs: list[LayerSpec] = []
    c = in_channels
    shape = (CLIP_TIME, *input_hw)
    for out_c, stride in zip(CONV_CHANNELS, CONV_STRIDES):
        specs.append(LayerSpec(kind="conv3d", in_channels=c, out_channels=out_c,
                               kernel=(3, 3, 3), stride=stride, padding=(1, 1, 1)))
        specs.append(LayerSpec(kind="relu"))
        shape = tuple((n + 2 - 3) // s + 1 for n, s in zip(shape, stride))
        c = out_c
    flat = c * int(np.prod(shape))
    specs.append(LayerSpec(kind="flatten"))
    specs.append(LayerSpec(kind="linear", in_features=flat, out_features=HIDDEN_FEATURES))
    specs.append(LayerSpec(kind="relu"))
    specs.append(LayerSpec(kind="linear", in_features=HIDDEN_FEATURES, out_features=1))
    return specs


@dataclass
class ConvNet3D:
    """Classifier plus everything needed to reproduce its predictions."""

    modality: str
    in_channels: int
    input_hw: tuple[int, int]
    network: Network
    stats: Optional[ChannelStats] = None
    seed: int = 0
    epoch: int = 0
    corpus_fingerprint: str = ""

    @property
    def input_shape(self) -> tuple[int, int, int, int]:
        return (self.in_channels, CLIP_TIME, *self.input_hw)

    def parameter_count(self) -> int:
        return sum(p.size for p in self.network.parameters())

    def resolve_layer(self, name: str) -> str:
        """Map a block alias (block1..block4) or raw layer name to a layer."""
        target = BLOCK_LAYERS.get(name, name)
        if target not in self.network.layer_names:
            raise DataError(f"unknown layer {name!r}; "
                            f"blocks are {sorted(BLOCK_LAYERS)}")
        return target


def build_model(modality: str, in_channels: int,
                input_hw: tuple[int, int] = (32, 32), seed: int = 0) -> ConvNet3D:
    specs = classifier_specs(in_channels, input_hw)
    input_shape = (in_channels, CLIP_TIME, *input_hw)
    validate_chain(specs, input_shape)
    net = build_network(specs, seed=seed, input_shape=input_shape)
    return ConvNet3D(modality=modality, in_channels=in_channels,
                     input_hw=tuple(input_hw), network=net, seed=seed)


@dataclass(frozen=True)
class ClipPrediction:
    logit: float
    probability: float
    label: str  # "real" | "fake"


def prepare_volume(model: ConvNet3D, volume: ModalityVolume) -> np.ndarray:
    """Normalize with the model's stored stats and shape-check against it."""
    if volume.tensor.shape != model.input_shape:
        raise DataError(
            f"volume shape {volume.tensor.shape} does not match model input "
            f"{model.input_shape}")
    if model.stats is not None and volume.stats is None:
        volume = normalize_volume(volume, model.stats)
    return volume.tensor


def predict_clip(model: ConvNet3D, volume: ModalityVolume) -> ClipPrediction:
    """Raw logit, sigmoid probability, and the thresholded label.

    Probability strictly greater than 0.5 means fake; exactly 0.5 resolves to
    real (conservative toward false negatives).
    """
    x = prepare_volume(model, volume)[None]
    logit = float(model.network.forward(x)[0])
    prob = float(sigmoid(np.float64(logit)))
    return ClipPrediction(logit=logit, probability=prob,
                          label="fake" if prob > 0.5 else "real")


def predict_logits(model: ConvNet3D, volumes: list[ModalityVolume],
                   batch_size: int = 32) -> np.ndarray:
    """Batched raw logits for many clips (evaluation path)."""
    xs = [prepare_volume(model, v) for v in volumes]
    out = np.empty(len(xs), dtype=np.float64)
    for i in range(0, len(xs), batch_size):
        batch = np.stack(xs[i:i + batch_size])
        out[i:i + len(batch)] = model.network.forward(batch)
    return out
