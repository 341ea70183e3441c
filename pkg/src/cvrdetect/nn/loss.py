"""Sigmoid + binary cross-entropy, evaluated in the stable log-sum-exp form."""
from __future__ import annotations

import numpy as np

from ..errors import DataError, assert_finite


def sigmoid(x):
    x = np.asarray(x)
    out = np.empty_like(x, dtype=np.result_type(x.dtype, np.float32))
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid_bce(logit, label):
    """Loss and d(loss)/d(logit) for one raw logit and a {0,1} label.

    loss = -[y*log sig(l) + (1-y)*log(1-sig(l))] = max(l,0) - l*y + log1p(exp(-|l|))
    """
    logit = np.asarray(logit, dtype=np.float64)
    label = np.asarray(label)
    if not np.all((label == 0) | (label == 1)):
        raise DataError(f"labels must be 0 or 1, got {label}")
    assert_finite(logit, "logit")
    loss = np.maximum(logit, 0) - logit * label + np.log1p(np.exp(-np.abs(logit)))
    grad = sigmoid(logit) - label
    if loss.ndim == 0:
        return float(loss), float(grad)
    return loss, grad


def batch_bce(logits: np.ndarray, labels: np.ndarray):
    """Mean BCE over a batch; gradient already divided by batch size.

    The gradient is returned in the logits' dtype so float32 training stays
    float32 end to end (the loss itself is evaluated in float64).
    """
    loss, grad = sigmoid_bce(logits, labels)
    n = logits.shape[0]
    return float(np.mean(loss)), np.asarray(grad / n, dtype=np.asarray(logits).dtype)
