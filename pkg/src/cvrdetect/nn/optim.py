"""Bias-corrected Adam over flat parameter lists."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, assert_finite


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], lr: float = 1e-4,
                   beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise DataError(f"lr must be > 0, got {lr}")
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params],
                   t=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> list[np.ndarray]:
    """One update; returns new parameter arrays, advances state in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DataError("params/grads/state length mismatch")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise DataError(f"grad shape {g.shape} != param shape {p.shape}")
        assert_finite(g, f"gradient for parameter {i}")
        g = np.asarray(g, dtype=p.dtype)
        state.m[i] = state.beta1 * state.m[i] + (1 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1 - state.beta2) * (g * g)
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        out.append((p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
                   .astype(p.dtype, copy=False))
    return out
