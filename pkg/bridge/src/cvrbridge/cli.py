"""Command-line surface, mirroring the detection pipeline's extract flags."""
from __future__ import annotations

import argparse
import sys

from .jobs import DEFAULT_MODELS, MODALITIES, BridgeJob, ModelUnavailable


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cvrbridge",
        description="Export pretrained-model features/flow/depth as CVRT.")
    sub = p.add_subparsers(dest="command", required=True)
    ex = sub.add_parser("export", help="run one export job")
    ex.add_argument("--modality", choices=MODALITIES, required=True)
    ex.add_argument("--frames", required=True,
                    help="image directory or raw RGB8 file with sidecar")
    ex.add_argument("--out", required=True, help="output .cvrt path")
    ex.add_argument("--model", default="",
                    help="model identifier (default per modality)")
    ex.add_argument("--size", nargs=2, type=int, default=(32, 32),
                    metavar=("H", "W"), help="target spatial grid")
    models = sub.add_parser("models", help="list default model identifiers")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "models":
        for modality, model in DEFAULT_MODELS.items():
            print(f"{modality}: {model}")
        return 0

    from .extractors import EXPORTERS
    job = BridgeJob(frames_path=args.frames, modality=args.modality,
                    out_path=args.out, model=args.model,
                    target_hw=tuple(args.size))
    try:
        out = EXPORTERS[args.modality](job)
    except ModelUnavailable as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
