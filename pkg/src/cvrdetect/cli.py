"""Thin CLI client for the detection service.

Every subcommand builds a request, sends it over HTTP, and formats the
response. By default the service runs in-process (no socket); --server
points the same client at a remote instance. Exit codes: 0 success,
1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_KIND_CODES = {"usage": EXIT_USAGE, "data": EXIT_DATA, "numeric": EXIT_NUMERIC}


def _client(server: str | None):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import app
    return TestClient(app)


def _call(ctx, path: str, payload: dict) -> dict:
    client = _client(ctx.obj.get("server"))
    resp = client.post(path, json=payload)
    if resp.status_code == 200:
        return resp.json()
    try:
        body = resp.json()
    except ValueError:
        body = {}
    if "kind" in body:
        click.echo(f"error ({body['kind']}): {body.get('message', '')}", err=True)
        sys.exit(_KIND_CODES.get(body["kind"], EXIT_USAGE))
    click.echo(f"error: {json.dumps(body.get('detail', body))}", err=True)
    sys.exit(EXIT_USAGE)


def _abs(path: str | None) -> str | None:
    return None if path is None else str(Path(path).absolute())


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL; default runs the service in-process.")
@click.pass_context
def cli(ctx, server):
    """Fake-video detection: corpus synthesis, training, evaluation, detection."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@cli.command()
@click.option("--out", "out_dir", required=True)
@click.option("--family", type=click.Choice(["A", "B"]), required=True)
@click.option("--n-train", type=int, required=True)
@click.option("--n-test", type=int, required=True)
@click.option("--n-val", type=int, default=0)
@click.option("--seed", type=int, default=0)
@click.option("--resolution", type=int, default=64)
@click.pass_context
def synth(ctx, out_dir, family, n_train, n_test, n_val, seed, resolution):
    """Generate a synthetic corpus (balanced real/fake per split)."""
    body = _call(ctx, "/v1/synth", {
        "out_dir": _abs(out_dir), "family": family, "n_train": n_train,
        "n_test": n_test, "n_val": n_val, "seed": seed,
        "resolution": resolution})
    click.echo(f"manifest: {body['manifest']}")
    click.echo(f"entries: {body['n_entries']}  fingerprint: {body['fingerprint']}")


@cli.command()
@click.option("--modality", type=click.Choice(["appearance", "flow"]),
              required=True)
@click.option("--frames", required=True)
@click.option("--out", required=True)
@click.option("--size", type=(int, int), default=None)
@click.pass_context
def extract(ctx, modality, frames, out, size):
    """Extract a modality volume from frames into a CVRT file."""
    body = _call(ctx, "/v1/extract", {
        "modality": modality, "frames": _abs(frames), "out": _abs(out),
        "size": list(size) if size else None})
    click.echo(f"wrote {body['out']} dims {body['dims']}")


@cli.command()
@click.option("--modality", type=click.Choice(["appearance", "flow", "depth"]),
              required=True)
@click.option("--manifest", required=True)
@click.option("--epochs", type=int, default=100)
@click.option("--lr", type=float, default=1e-4)
@click.option("--batch", type=int, default=20)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True)
@click.pass_context
def train(ctx, modality, manifest, epochs, lr, batch, seed, out):
    """Train one modality expert on the manifest's train split."""
    body = _call(ctx, "/v1/train", {
        "modality": modality, "manifest": _abs(manifest), "epochs": epochs,
        "lr": lr, "batch": batch, "seed": seed, "out": _abs(out)})
    click.echo(f"checkpoint: {body['checkpoint']}")
    click.echo(f"epochs run: {body['epochs_run']}  best epoch: {body['best_epoch']}"
               f"  train acc: {body['final_train_acc']:.4f}"
               f"  best val acc: {body['best_val_acc']}")


def _ckpt_options(f):
    f = click.option("--ckpt-a", default=None, help="appearance checkpoint")(f)
    f = click.option("--ckpt-m", default=None, help="flow/motion checkpoint")(f)
    f = click.option("--ckpt-g", default=None, help="depth/geometry checkpoint")(f)
    return f


@cli.command(name="eval")
@click.option("--manifest", required=True)
@click.option("--split", default="test")
@_ckpt_options
@click.option("--weights", default=None)
@click.option("--report", required=True)
@click.option("--epsilon", type=float, default=None)
@click.option("--allow-imbalanced", is_flag=True)
@click.option("--seed", type=int, default=0)
@click.pass_context
def eval_cmd(ctx, manifest, split, ckpt_a, ckpt_m, ckpt_g, weights, report,
             epsilon, allow_imbalanced, seed):
    """Evaluate fused experts on a split and write the report files."""
    body = _call(ctx, "/v1/eval", {
        "manifest": _abs(manifest), "split": split,
        "ckpt": {"a": _abs(ckpt_a), "m": _abs(ckpt_m), "g": _abs(ckpt_g)},
        "weights": _abs(weights), "report": _abs(report), "epsilon": epsilon,
        "allow_imbalanced": allow_imbalanced, "seed": seed})
    click.echo(f"video accuracy: {body['video_accuracy']:.4f}")
    click.echo(f"clip accuracy:  {body['clip_accuracy']:.4f}")
    click.echo("counts: " + json.dumps(body["counts"]))
    click.echo("reports: " + ", ".join(body["report_files"]))


@cli.command()
@click.option("--manifest", required=True)
@click.option("--split", default="val")
@_ckpt_options
@click.option("--out", required=True)
@click.option("--epsilon", type=float, default=0.05)
@click.pass_context
def calibrate(ctx, manifest, split, ckpt_a, ckpt_m, ckpt_g, out, epsilon):
    """Grid-search fusion weights on a validation split."""
    body = _call(ctx, "/v1/calibrate", {
        "manifest": _abs(manifest), "split": split,
        "ckpt": {"a": _abs(ckpt_a), "m": _abs(ckpt_m), "g": _abs(ckpt_g)},
        "out": _abs(out), "epsilon": epsilon})
    click.echo(f"weights: a={body['alpha_a']:.3f} m={body['alpha_m']:.3f} "
               f"g={body['alpha_g']:.3f} -> {body['weights_file']}")


@cli.command()
@click.option("--ckpt", required=True)
@click.option("--manifest", required=True)
@click.option("--clip-id", required=True)
@click.option("--layer", default="block3")
@click.option("--out", "out_dir", required=True)
@click.pass_context
def gradcam(ctx, ckpt, manifest, clip_id, layer, out_dir):
    """Export Grad-CAM overlays (and IoU against the artifact mask if any)."""
    body = _call(ctx, "/v1/gradcam", {
        "ckpt": _abs(ckpt), "manifest": _abs(manifest), "clip_id": clip_id,
        "layer": layer, "out_dir": _abs(out_dir)})
    click.echo(f"wrote {len(body['files'])} files to {out_dir}")
    if body.get("iou") is not None:
        click.echo(f"localization IoU vs artifact mask: {body['iou']:.4f}")


@cli.command()
@click.option("--input", "input_path", required=True)
@_ckpt_options
@click.option("--weights", default=None)
@click.option("--epsilon", type=float, default=0.05)
@click.option("--appearance-cvrt", default=None)
@click.option("--flow-cvrt", default=None)
@click.option("--depth-cvrt", default=None)
@click.option("--gradcam-out", default=None)
@click.option("--gradcam-top-k", type=int, default=1)
@click.pass_context
def detect(ctx, input_path, ckpt_a, ckpt_m, ckpt_g, weights, epsilon,
           appearance_cvrt, flow_cvrt, depth_cvrt, gradcam_out, gradcam_top_k):
    """Classify one video as real or fake by clip voting."""
    body = _call(ctx, "/v1/detect", {
        "input": _abs(input_path),
        "ckpt": {"a": _abs(ckpt_a), "m": _abs(ckpt_m), "g": _abs(ckpt_g)},
        "weights": _abs(weights), "epsilon": epsilon,
        "appearance_cvrt": _abs(appearance_cvrt),
        "flow_cvrt": _abs(flow_cvrt), "depth_cvrt": _abs(depth_cvrt),
        "gradcam_dir": _abs(gradcam_out), "gradcam_top_k": gradcam_top_k})
    click.echo(f"verdict: {body['verdict']}")
    click.echo(f"fake fraction: {body['fake_fraction']:.4f} "
               f"({body['n_clips']} clips)")
    for c in body["clips"]:
        click.echo(f"  clip {c['index']:3d}: fused {c['fused_logit']:+.4f} "
                   f"-> {c['label']}")
    for d in body.get("heatmap_dirs", []):
        click.echo(f"  heatmaps: {d}")
    if body["verdict"] == "insufficient-frames":
        sys.exit(EXIT_DATA)


@cli.command()
@click.option("--manifest-a", required=True)
@click.option("--manifest-b", default=None)
@click.option("--protocols", default="in_domain,cross_family")
@click.option("--out", "out_dir", required=True)
@click.option("--seed", type=int, default=0)
@click.option("--epochs", type=int, default=100)
@click.option("--lr", type=float, default=1e-4)
@click.option("--batch", type=int, default=20)
@click.option("--epsilon", type=float, default=0.05)
@click.pass_context
def protocol(ctx, manifest_a, manifest_b, protocols, out_dir, seed, epochs,
             lr, batch, epsilon):
    """Run the in-domain / cross-family protocols with ablation rows."""
    body = _call(ctx, "/v1/protocol", {
        "manifest_a": _abs(manifest_a), "manifest_b": _abs(manifest_b),
        "protocols": [p.strip() for p in protocols.split(",") if p.strip()],
        "out_dir": _abs(out_dir), "seed": seed, "epochs": epochs, "lr": lr,
        "batch": batch, "epsilon": epsilon})
    click.echo(body["table"], nl=False)
    click.echo(f"results in {body['out_dir']}")


@cli.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8321)
def serve(host, port):
    """Run the detection service."""
    import uvicorn

    from .service import app
    uvicorn.run(app, host=host, port=port)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, obj={})
        return 0
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
