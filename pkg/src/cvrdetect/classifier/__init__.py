from .checkpoint import load_checkpoint, save_checkpoint
from .model import (BLOCK_LAYERS, ClipPrediction, ConvNet3D, build_model,
                    classifier_specs, predict_clip, predict_logits,
                    prepare_volume)
from .train import EpochStats, TrainConfig, train

__all__ = [
    "BLOCK_LAYERS", "ClipPrediction", "ConvNet3D", "build_model",
    "classifier_specs", "predict_clip", "predict_logits", "prepare_volume",
    "load_checkpoint", "save_checkpoint",
    "EpochStats", "TrainConfig", "train",
]
