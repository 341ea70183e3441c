from .audit import (audit_occlusion, brightness_constancy_error,
                    size_depth_ratio_spread)
from .build import (FAMILIES, FAMILY_RANGES, CorpusConfig, build_corpus,
                    corpus_fingerprint, load_manifest)
from .injectors import INJECTOR_KINDS, Injector, apply_injectors
from .scene import (BG_DEPTH_M, N_FRAMES, GroundTruth, SceneDef, SceneRender,
                    Sprite, analytic_flow, generate_scene, make_scene,
                    render_scene)

__all__ = [
    "audit_occlusion", "brightness_constancy_error", "size_depth_ratio_spread",
    "FAMILIES", "FAMILY_RANGES", "CorpusConfig", "build_corpus",
    "corpus_fingerprint", "load_manifest",
    "INJECTOR_KINDS", "Injector", "apply_injectors",
    "BG_DEPTH_M", "N_FRAMES", "GroundTruth", "SceneDef", "SceneRender",
    "Sprite", "analytic_flow", "generate_scene", "make_scene", "render_scene",
]
