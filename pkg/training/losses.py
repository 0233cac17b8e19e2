"""
Softmax cross-entropy on [B, M] logits
"""

from typing import Tuple

import numpy as np

from utils.errors import DimensionError, LabelRangeError


def cross_entropy(logits, labels) -> Tuple[float, np.ndarray]:
    """
    Mean negative log-likelihood via log-sum-exp, and its gradient
    (softmax - onehot) / B with the dtype of the logits.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2:
        raise DimensionError(f"logits must be [B, M], got shape {logits.shape}")
    batch, classes = logits.shape
    if labels.shape != (batch,):
        raise DimensionError.mismatch("labels", labels.shape, (batch,))
    if batch and (labels.min() < 0 or labels.max() >= classes):
        raise LabelRangeError(f"labels must lie in [0, {classes}), got [{labels.min()}, {labels.max()}]")

    values = logits.astype(np.float64)
    peak = values.max(axis=1, keepdims=True)
    log_norm = peak + np.log(np.exp(values - peak).sum(axis=1, keepdims=True))
    rows = np.arange(batch)
    loss = float(np.mean(log_norm[:, 0] - values[rows, labels]))

    grad = np.exp(values - log_norm)
    grad[rows, labels] -= 1.0
    grad /= batch
    dtype = logits.dtype if np.issubdtype(logits.dtype, np.floating) else np.float64
    return loss, grad.astype(dtype)
