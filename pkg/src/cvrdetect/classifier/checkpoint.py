"""Checkpoint serialization ("CVRM" format, little-endian).

Layout: magic "CVRM" | u16 version=1 | u32 JSON byte length | UTF-8 JSON
header | parameter tensors as float32, layer order, weights before bias.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..cvr import CLIP_TIME, ChannelStats
from ..errors import FormatError
from ..nn import LayerSpec, build_network, validate_chain
from .model import ConvNet3D

MAGIC = b"CVRM"
VERSION = 1


def save_checkpoint(model: ConvNet3D, path) -> None:
    path = Path(path)
    header = {
        "architecture": [s.to_json() for s in model.network.specs()],
        "modality": model.modality,
        "in_channels": model.in_channels,
        "input_hw": list(model.input_hw),
        "normalization": model.stats.to_json() if model.stats else None,
        "seed": model.seed,
        "epoch": model.epoch,
        "corpus_fingerprint": model.corpus_fingerprint,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<HI", VERSION, len(blob)))
            f.write(blob)
            for p in model.network.parameters():
                f.write(np.ascontiguousarray(p, dtype="<f4").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _param_shapes(specs: list[LayerSpec]) -> list[tuple[int, ...]]:
    shapes = []
    for s in specs:
        if s.kind == "conv3d":
            shapes.append((s.out_channels, s.in_channels, *s.kernel))
            shapes.append((s.out_channels,))
        elif s.kind == "linear":
            shapes.append((s.out_features, s.in_features))
            shapes.append((s.out_features,))
    return shapes


def load_checkpoint(path) -> ConvNet3D:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 10:
        raise FormatError(f"{path}: shorter than a checkpoint header")
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    version, jlen = struct.unpack("<HI", data[4:10])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    if len(data) < 10 + jlen:
        raise FormatError(f"{path}: truncated JSON header")
    header = json.loads(data[10:10 + jlen].decode())

    specs = [LayerSpec.from_json(d) for d in header["architecture"]]
    in_channels = int(header["in_channels"])
    input_hw = tuple(int(x) for x in header["input_hw"])
    input_shape = (in_channels, CLIP_TIME, *input_hw)
    validate_chain(specs, input_shape)

    shapes = _param_shapes(specs)
    total = sum(int(np.prod(s)) for s in shapes)
    blob = data[10 + jlen:]
    if len(blob) != 4 * total:
        raise FormatError(
            f"{path}: parameter length mismatch, architecture needs "
            f"{4 * total} bytes, blob has {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f4")

    net = build_network(specs, seed=0, input_shape=input_shape)
    params = []
    off = 0
    for s in shapes:
        n = int(np.prod(s))
        params.append(flat[off:off + n].reshape(s).copy())
        off += n
    net.set_parameters(params)

    stats = None
    if header.get("normalization"):
        stats = ChannelStats.from_json(header["normalization"])
    return ConvNet3D(
        modality=header["modality"], in_channels=in_channels,
        input_hw=input_hw, network=net, stats=stats,
        seed=int(header.get("seed", 0)), epoch=int(header.get("epoch", 0)),
        corpus_fingerprint=header.get("corpus_fingerprint", ""))
