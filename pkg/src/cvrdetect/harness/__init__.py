from .cache import (WORKING_HW, cached_split_logits, clip_volume,
                    model_fingerprint, volumes_dir)
from .detect import ClipVerdict, DetectResult, detect
from .evaluate import (KEY_BY_MODALITY, MODALITY_BY_KEY, EvalReport,
                       VideoResult, check_balance, evaluate,
                       evaluate_from_logits, split_entries)
from .protocol import (MODALITIES, ROWS, ProtocolConfig, checkpoint_path,
                       row_name, run_protocol, train_all, train_expert,
                       val_logits)
from .report import (protocol_results_json, render_protocol_table,
                     render_report_text, report_json, write_report)

__all__ = [
    "WORKING_HW", "cached_split_logits", "clip_volume", "model_fingerprint",
    "volumes_dir",
    "ClipVerdict", "DetectResult", "detect",
    "KEY_BY_MODALITY", "MODALITY_BY_KEY", "EvalReport", "VideoResult",
    "check_balance", "evaluate", "evaluate_from_logits", "split_entries",
    "MODALITIES", "ROWS", "ProtocolConfig", "checkpoint_path", "row_name",
    "run_protocol", "train_all", "train_expert", "val_logits",
    "protocol_results_json", "render_protocol_table", "render_report_text",
    "report_json", "write_report",
]
