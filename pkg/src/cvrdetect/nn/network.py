"""Sequential network wrapper: forward with activation capture, exact reverse-mode
backward, and gradient access per named layer (needed by Grad-CAM)."""
from __future__ import annotations

import copy

import numpy as np

from ..errors import DataError, assert_finite
from .layers import Conv3d, Flatten, LayerSpec, Linear, ReLU, conv3d_output_shape, make_layer


class Network:
    """Ordered, named layers ending in a single-logit linear head."""

    def __init__(self, layers: list[tuple[str, object]]):
        names = [n for n, _ in layers]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate layer names in {names}")
        self.layers = layers
        self._activations: dict[str, np.ndarray] = {}
        self._activation_grads: dict[str, np.ndarray] = {}
        self._forward_done = False

    @property
    def layer_names(self) -> list[str]:
        return [n for n, _ in self.layers]

    def forward(self, x: np.ndarray, keep_activations: bool = False,
                check_finite: bool = True) -> np.ndarray:
        """Run the stack on [N, ...] input; returns raw logits [N]."""
        self._activations = {}
        out = x
        for name, layer in self.layers:
            out = layer.forward(out, keep=keep_activations)
            if check_finite:
                assert_finite(out, f"activation of layer {name!r}")
            if keep_activations:
                self._activations[name] = out
        if out.ndim != 2 or out.shape[1] != 1:
            raise DataError(
                f"network must emit one value per batch item, got shape {out.shape}")
        self._forward_done = keep_activations
        return out[:, 0]

    def backward(self, dlogit: np.ndarray, check_finite: bool = True) -> None:
        """Backprop from d(objective)/d(logit) [N]; fills per-layer grads and
        gradient w.r.t. every named activation."""
        if not self._forward_done:
            raise DataError("backward called before forward(keep_activations=True)")
        self._activation_grads = {}
        grad = np.asarray(dlogit).reshape(-1, 1)
        for name, layer in reversed(self.layers):
            self._activation_grads[name] = grad
            grad = layer.backward(grad)
            if check_finite:
                assert_finite(grad, f"gradient into layer {name!r}")
        self._input_grad = grad

    def activation(self, name: str) -> np.ndarray:
        if name not in self._activations:
            raise DataError(f"no cached activation for layer {name!r}")
        return self._activations[name]

    def activation_grad(self, name: str) -> np.ndarray:
        if name not in self._activation_grads:
            raise DataError(f"no cached activation gradient for layer {name!r}")
        return self._activation_grads[name]

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list, layer order, weights before bias."""
        out = []
        for _, layer in self.layers:
            out.extend(layer.params())
        return out

    def gradients(self) -> list[np.ndarray]:
        out = []
        for _, layer in self.layers:
            out.extend(layer.grads())
        return out

    def set_parameters(self, arrays: list[np.ndarray]) -> None:
        i = 0
        for _, layer in self.layers:
            n = len(layer.params())
            if n:
                old = layer.params()
                for a, b in zip(arrays[i:i + n], old):
                    if a.shape != b.shape:
                        raise DataError(
                            f"parameter shape drift: {a.shape} vs {b.shape}")
                layer.set_params(arrays[i:i + n])
            i += n
        if i != len(arrays):
            raise DataError(f"expected {i} parameter tensors, got {len(arrays)}")

    def specs(self) -> list[LayerSpec]:
        return [layer.spec for _, layer in self.layers]

    def cast(self, dtype) -> "Network":
        """Deep copy with parameters cast (float64 check mode for grad tests)."""
        net = copy.deepcopy(self)
        for _, layer in net.layers:
            ps = [p.astype(dtype) for p in layer.params()]
            if ps:
                layer.set_params(ps)
        return net


def backward_activation_grads(net: Network, dlogit: np.ndarray) -> None:
    net.backward(dlogit)


def validate_chain(specs: list[LayerSpec], input_shape: tuple) -> tuple:
    """Walk declared layer specs through an input shape [C,T,H,W]; returns final
    feature count. Raises DataError on any inconsistency."""
    shape = tuple(input_shape)
    flat = None
    for spec in specs:
        if spec.kind == "conv3d":
            if flat is not None:
                raise DataError("conv3d after flatten")
            c, t, h, w = shape
            if c != spec.in_channels:
                raise DataError(
                    f"layer expects {spec.in_channels} channels, chain carries {c}")
            out = conv3d_output_shape((t, h, w), spec.kernel,
                                      spec.stride or (1, 1, 1),
                                      spec.padding or (0, 0, 0))
            shape = (spec.out_channels, *out)
        elif spec.kind == "flatten":
            flat = int(np.prod(shape))
        elif spec.kind == "linear":
            if flat is None:
                raise DataError("linear before flatten")
            if flat != spec.in_features:
                raise DataError(
                    f"linear expects {spec.in_features} features, chain carries {flat}")
            flat = spec.out_features
        elif spec.kind == "relu":
            pass
    if flat is None:
        raise DataError("network has no flatten/linear head")
    return flat


def build_network(specs: list[LayerSpec], seed: int, input_shape: tuple,
                  dtype=np.float32) -> Network:
    """Instantiate a named Network from specs; validates the shape chain."""
    validate_chain(specs, input_shape)
    rng = np.random.default_rng(seed)
    counts: dict[str, int] = {}
    layers = []
    for spec in specs:
        counts[spec.kind] = counts.get(spec.kind, 0) + 1
        name = f"{spec.kind}{counts[spec.kind]}"
        layers.append((name, make_layer(spec, rng, dtype=dtype)))
    return Network(layers)
