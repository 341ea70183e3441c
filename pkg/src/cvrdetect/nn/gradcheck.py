"""Central finite-difference gradient checking (float64 check mode).

Coordinates whose +/-h perturbation flips any ReLU mask are resampled: the
loss is non-differentiable across the kink, so the comparison is only defined
at smooth points.
"""
from __future__ import annotations

import numpy as np

from .layers import ReLU
from .loss import batch_bce
from .network import Network


def _relu_signature(net: Network) -> bytes:
    sig = []
    for _, layer in net.layers:
        if isinstance(layer, ReLU) and layer._mask is not None:
            sig.append(layer._mask.tobytes())
    return b"".join(sig)


def finite_difference_check(net: Network, x: np.ndarray, y: np.ndarray,
                            coords_per_tensor: int = 35, h: float = 1e-3,
                            rtol: float = 1e-4, seed: int = 0) -> int:
    """Check analytic gradients of mean BCE against central differences.

    Returns the number of coordinates checked; raises AssertionError with the
    offending values on any relative error >= rtol.
    """
    net = net.cast(np.float64)
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=np.float64)

    logits = net.forward(x, keep_activations=True)
    base_sig = _relu_signature(net)
    _, dlogit = batch_bce(logits, y)
    net.backward(dlogit)
    analytic = [g.copy() for g in net.gradients()]

    def loss_and_sig():
        loss, _ = batch_bce(net.forward(x, keep_activations=True), y)
        return loss, _relu_signature(net)

    checked = 0
    for p, g in zip(net.parameters(), analytic):
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        want = min(coords_per_tensor, flat.size)
        order = rng.permutation(flat.size)
        done = 0
        for i in order:
            if done >= want:
                break
            orig = flat[i]
            flat[i] = orig + h
            up, sig_up = loss_and_sig()
            flat[i] = orig - h
            dn, sig_dn = loss_and_sig()
            flat[i] = orig
            if sig_up != base_sig or sig_dn != base_sig:
                continue  # kink crossed; derivative undefined here
            num = (up - dn) / (2 * h)
            ana = gflat[i]
            denom = max(abs(num), abs(ana), 1e-8)
            if abs(num - ana) / denom >= rtol:
                raise AssertionError(
                    f"gradient mismatch at coordinate {i}: "
                    f"numeric {num!r} vs analytic {ana!r}")
            done += 1
            checked += 1
    # restore caches to base point
    net.forward(x, keep_activations=True)
    return checked
