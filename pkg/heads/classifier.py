"""
Softmax classifier on top of head logits
"""

import numpy as np

from utils.errors import DimensionError


def _as_logits(logits) -> np.ndarray:
    logits = np.asarray(logits)
    if logits.ndim != 2 or min(logits.shape) < 1:
        raise DimensionError(f"logits must be [B, M], got shape {logits.shape}")
    return logits


def classify(logits) -> np.ndarray:
    """Row-wise stable softmax: P = softmax(Z)"""
    logits = _as_logits(logits)
    values = logits.astype(np.float64)
    exps = np.exp(values - values.max(axis=1, keepdims=True))
    probs = exps / exps.sum(axis=1, keepdims=True)
    return probs.astype(logits.dtype if np.issubdtype(logits.dtype, np.floating) else np.float64)


def predict(logits) -> np.ndarray:
    """Arg-max category per row, ties to the lowest index"""
    return np.argmax(_as_logits(logits), axis=1)


def top_k(logits, k: int) -> np.ndarray:
    """[B, k] category indices by decreasing score, ties to the lowest index"""
    logits = _as_logits(logits)
    k = min(k, logits.shape[1])
    order = np.argsort(-logits.astype(np.float64), axis=1, kind="stable")
    return order[:, :k]
