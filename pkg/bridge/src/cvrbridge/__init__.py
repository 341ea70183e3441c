from .cvrt import CvrtFormatError, read_cvrt, write_cvrt
from .extractors import export_appearance, export_depth, export_flow
from .jobs import (DEFAULT_MODELS, MODALITIES, TIME_EXTENT, BridgeJob,
                   ModelUnavailable, finish_export, pool_to_grid)

__version__ = "0.1.0"

__all__ = [
    "CvrtFormatError", "read_cvrt", "write_cvrt",
    "export_appearance", "export_depth", "export_flow",
    "DEFAULT_MODELS", "MODALITIES", "TIME_EXTENT", "BridgeJob",
    "ModelUnavailable", "finish_export", "pool_to_grid",
]
