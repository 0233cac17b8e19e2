"""
SGD with momentum and weight decay, plus per-epoch learning-rate schedules
"""

import math
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from config.settings import LR_SCHEDULES
from utils.errors import ConfigurationError, DimensionError


def sgd_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray],
             state: Optional[Dict[str, np.ndarray]], lr: float, momentum: float,
             weight_decay: float) -> Dict[str, np.ndarray]:
    """
    In place, per parameter:
        v <- momentum * v + grad + weight_decay * param
        param <- param - lr * v
    Returns the velocity state.
    """
    state = {} if state is None else state
    for path, param in params.items():
        if path not in grads:
            raise DimensionError(f"no gradient for parameter {path}")
        grad = grads[path]
        if grad.shape != param.shape:
            raise DimensionError.mismatch(f"gradient {path}", grad.shape, param.shape)
        velocity = state.get(path)
        if velocity is None:
            velocity = np.zeros_like(param)
        velocity = (momentum * velocity + grad + weight_decay * param).astype(param.dtype)
        param -= (lr * velocity).astype(param.dtype)
        state[path] = velocity
    return state


class SGD:
    """Keeps the velocity state between steps for a fixed set of named arrays"""

    def __init__(self, params: Mapping[str, np.ndarray], momentum: float = 0.9, weight_decay: float = 1e-4):
        if not 0 <= momentum < 1:
            raise ConfigurationError(f"momentum must lie in [0, 1), got {momentum}")
        if weight_decay < 0:
            raise ConfigurationError(f"weight decay must be >= 0, got {weight_decay}")
        self.params = dict(params)
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.state: Dict[str, np.ndarray] = {}

    def step(self, grads: Mapping[str, np.ndarray], lr: float, frozen: Sequence[str] = ()):
        """Update every parameter whose path does not start with a frozen prefix"""
        active = {path: p for path, p in self.params.items() if not path.startswith(tuple(frozen))}
        sgd_step(active, grads, self.state, lr, self.momentum, self.weight_decay)


def learning_rate_at(epoch: int, base_lr: float, schedule: str = "constant", total_epochs: int = 1,
                     step_epochs: int = 30, decay: float = 0.1) -> float:
    """Learning rate for a 0-based epoch"""
    if schedule not in LR_SCHEDULES:
        raise ConfigurationError(f"lr schedule must be one of {LR_SCHEDULES}, got {schedule!r}")
    if schedule == "step":
        return base_lr * decay ** (epoch // max(step_epochs, 1))
    if schedule == "cosine":
        return 0.5 * base_lr * (1.0 + math.cos(math.pi * epoch / max(total_epochs, 1)))
    if schedule == "linear":
        return base_lr * (1.0 - epoch / max(total_epochs, 1))
    return base_lr
