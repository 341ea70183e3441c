"""Dense 3D conv / linear layers with exact backward passes.

Tensors are plain numpy arrays, float32 storage, row-major. A float64 "check
mode" (Network.cast) exists for finite-difference gradient tests only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DataError

Triple = tuple[int, int, int]

_KNOWN_KINDS = ("conv3d", "relu", "linear", "flatten")


@dataclass(frozen=True)
class LayerSpec:
    """Declarative description of one layer; serialized into checkpoints."""

    kind: str
    in_channels: Optional[int] = None
    out_channels: Optional[int] = None
    kernel: Optional[Triple] = None
    stride: Optional[Triple] = None
    padding: Optional[Triple] = None
    in_features: Optional[int] = None
    out_features: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _KNOWN_KINDS:
            raise DataError(f"unknown layer kind {self.kind!r}")
        if self.kind == "conv3d":
            if not (self.in_channels and self.out_channels and self.kernel):
                raise DataError("conv3d spec needs in_channels, out_channels, kernel")
            if any(k < 1 for k in self.kernel):
                raise DataError(f"kernel extents must be >= 1, got {self.kernel}")
            if self.stride is not None and any(s < 1 for s in self.stride):
                raise DataError(f"stride extents must be >= 1, got {self.stride}")
        if self.kind == "linear" and not (self.in_features and self.out_features):
            raise DataError("linear spec needs in_features, out_features")

    def to_json(self) -> dict:
        d = {"kind": self.kind}
        for f in ("in_channels", "out_channels", "kernel", "stride", "padding",
                  "in_features", "out_features"):
            v = getattr(self, f)
            if v is not None:
                d[f] = list(v) if isinstance(v, tuple) else v
        return d

    @classmethod
    def from_json(cls, d: dict) -> "LayerSpec":
        kind = d.get("kind")
        if kind not in _KNOWN_KINDS:
            raise DataError(f"unknown layer kind {kind!r}")
        kw = {}
        for f in ("in_channels", "out_channels", "in_features", "out_features"):
            if f in d:
                kw[f] = int(d[f])
        for f in ("kernel", "stride", "padding"):
            if f in d:
                kw[f] = tuple(int(x) for x in d[f])
        return cls(kind=kind, **kw)


def conv3d_output_shape(in_shape: Triple, kernel: Triple, stride: Triple,
                        padding: Triple) -> Triple:
    """Derived (T', H', W') extents; raises if any would be < 1."""
    out = []
    for n, k, s, p in zip(in_shape, kernel, stride, padding):
        span = n + 2 * p - k
        if span < 0 or span // s + 1 < 1:
            raise DataError(
                f"non-positive conv output extent for input {in_shape}, "
                f"kernel {kernel}, stride {stride}, padding {padding}")
        out.append(span // s + 1)
    return tuple(out)


def _windows(xp: np.ndarray, kernel: Triple, stride: Triple) -> np.ndarray:
    """Strided view of all kernel windows: [N,C,T',H',W',kt,kh,kw]."""
    v = sliding_window_view(xp, kernel, axis=(2, 3, 4))
    st, sh, sw = stride
    return v[:, :, ::st, ::sh, ::sw]


def conv3d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
                   stride: Triple = (1, 1, 1), padding: Triple = (0, 0, 0)) -> np.ndarray:
    """Cross-correlation of [N,C,T,H,W] input with [O,C,kt,kh,kw] kernels.

    Evaluated as one im2col + matmul so the heavy lifting runs in BLAS.
    """
    if x.ndim != 5 or weight.ndim != 5:
        raise DataError(f"conv3d expects 5D input/weight, got {x.shape} / {weight.shape}")
    n, c, t, h, w = x.shape
    o, cw, kt, kh, kw = weight.shape
    if cw != c:
        raise DataError(f"input has {c} channels but kernel expects {cw}")
    if bias.shape != (o,):
        raise DataError(f"bias must be shaped ({o},), got {bias.shape}")
    to, ho, wo = conv3d_output_shape((t, h, w), (kt, kh, kw), stride, padding)
    pt, ph, pw = padding
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pt), (ph, ph), (pw, pw)))
    win = _windows(xp, (kt, kh, kw), stride)
    cols = win.transpose(0, 2, 3, 4, 1, 5, 6, 7).reshape(n * to * ho * wo, c * kt * kh * kw)
    out = cols @ weight.reshape(o, -1).T
    out += bias
    return np.ascontiguousarray(
        out.reshape(n, to, ho, wo, o).transpose(0, 4, 1, 2, 3))


def conv3d_backward(x: np.ndarray, weight: np.ndarray, dout: np.ndarray,
                    stride: Triple = (1, 1, 1), padding: Triple = (0, 0, 0)):
    """Gradients (dx, dw, db) of conv3d_forward for upstream gradient dout."""
    n, c, t, h, w = x.shape
    o, _, kt, kh, kw = weight.shape
    _, _, to, ho, wo = dout.shape
    st, sh, sw = stride
    pt, ph, pw = padding

    dmat = dout.transpose(0, 2, 3, 4, 1).reshape(n * to * ho * wo, o)
    db = dout.sum(axis=(0, 2, 3, 4))

    xp = np.pad(x, ((0, 0), (0, 0), (pt, pt), (ph, ph), (pw, pw)))
    win = _windows(xp, (kt, kh, kw), stride)
    cols = win.transpose(0, 2, 3, 4, 1, 5, 6, 7).reshape(n * to * ho * wo, -1)
    dw = (dmat.T @ cols).reshape(o, c, kt, kh, kw)

    dwin = (dmat @ weight.reshape(o, -1)).reshape(n, to, ho, wo, c, kt, kh, kw)
    dxp = np.zeros_like(xp)
    for i in range(kt):
        for j in range(kh):
            for k in range(kw):
                dxp[:, :, i:i + st * to:st, j:j + sh * ho:sh, k:k + sw * wo:sw] += \
                    dwin[:, :, :, :, :, i, j, k].transpose(0, 4, 1, 2, 3)
    dx = dxp[:, :, pt:pt + t, ph:ph + h, pw:pw + w]
    return dx, dw, db


class Conv3d:
    def __init__(self, spec: LayerSpec, weight: np.ndarray, bias: np.ndarray):
        assert spec.kind == "conv3d"
        self.spec = spec
        self.w = weight
        self.b = bias
        self.grad_w = None
        self.grad_b = None
        self._x = None

    @property
    def stride(self) -> Triple:
        return self.spec.stride or (1, 1, 1)

    @property
    def padding(self) -> Triple:
        return self.spec.padding or (0, 0, 0)

    def forward(self, x, keep=False):
        if keep:
            self._x = x
        return conv3d_forward(x, self.w, self.b, self.stride, self.padding)

    def backward(self, dout):
        if self._x is None:
            raise DataError("conv3d backward called before forward")
        dx, self.grad_w, self.grad_b = conv3d_backward(
            self._x, self.w, dout, self.stride, self.padding)
        return dx

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.grad_w, self.grad_b]

    def set_params(self, arrays):
        self.w, self.b = arrays


class ReLU:
    def __init__(self, spec: LayerSpec | None = None):
        self.spec = spec or LayerSpec(kind="relu")
        self._mask = None

    def forward(self, x, keep=False):
        out = np.maximum(x, 0)
        if keep:
            self._mask = x > 0
        return out

    def backward(self, dout):
        if self._mask is None:
            raise DataError("relu backward called before forward")
        return dout * self._mask

    def params(self):
        return []

    def grads(self):
        return []

    def set_params(self, arrays):
        pass


class Flatten:
    def __init__(self, spec: LayerSpec | None = None):
        self.spec = spec or LayerSpec(kind="flatten")
        self._shape = None

    def forward(self, x, keep=False):
        if keep:
            self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        if self._shape is None:
            raise DataError("flatten backward called before forward")
        return dout.reshape(self._shape)

    def params(self):
        return []

    def grads(self):
        return []

    def set_params(self, arrays):
        pass


class Linear:
    def __init__(self, spec: LayerSpec, weight: np.ndarray, bias: np.ndarray):
        assert spec.kind == "linear"
        self.spec = spec
        self.w = weight  # [out_features, in_features]
        self.b = bias
        self.grad_w = None
        self.grad_b = None
        self._x = None

    def forward(self, x, keep=False):
        if x.shape[1] != self.w.shape[1]:
            raise DataError(
                f"linear expects {self.w.shape[1]} features, got {x.shape[1]}")
        if keep:
            self._x = x
        return x @ self.w.T + self.b

    def backward(self, dout):
        if self._x is None:
            raise DataError("linear backward called before forward")
        self.grad_w = dout.T @ self._x
        self.grad_b = dout.sum(axis=0)
        return dout @ self.w

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.grad_w, self.grad_b]

    def set_params(self, arrays):
        self.w, self.b = arrays


def make_layer(spec: LayerSpec, rng: np.random.Generator | None = None,
               dtype=np.float32):
    """Instantiate a layer from its spec with He fan-in init (zero bias)."""
    if spec.kind == "relu":
        return ReLU(spec)
    if spec.kind == "flatten":
        return Flatten(spec)
    if rng is None:
        raise DataError(f"{spec.kind} layer needs an rng for initialization")
    if spec.kind == "conv3d":
        kt, kh, kw = spec.kernel
        fan_in = spec.in_channels * kt * kh * kw
        w = (rng.standard_normal((spec.out_channels, spec.in_channels, kt, kh, kw))
             * np.sqrt(2.0 / fan_in)).astype(dtype)
        b = np.zeros(spec.out_channels, dtype=dtype)
        return Conv3d(spec, w, b)
    if spec.kind == "linear":
        w = (rng.standard_normal((spec.out_features, spec.in_features))
             * np.sqrt(2.0 / spec.in_features)).astype(dtype)
        b = np.zeros(spec.out_features, dtype=dtype)
        return Linear(spec, w, b)
    raise DataError(f"unknown layer kind {spec.kind!r}")
