"""
Gradient containers and the central finite-difference oracle
"""

from typing import Callable, Dict, Mapping

import numpy as np

from utils.errors import DimensionError, InvariantViolation

FD_STEP = 1e-5
ABSOLUTE_FLOOR = 1e-8


class GradientSet(dict):
    """Parameter path -> gradient array, one entry per learnable array"""

    def merge(self, other: Mapping[str, np.ndarray]) -> "GradientSet":
        clash = set(self) & set(other)
        if clash:
            raise InvariantViolation(f"gradient paths produced twice: {sorted(clash)}")
        merged = GradientSet(self)
        merged.update(other)
        return merged

    def validate(self, params: Mapping[str, np.ndarray]) -> "GradientSet":
        """Check keys and shapes against the parameters they differentiate"""
        if set(self) != set(params):
            missing = sorted(set(params) - set(self))
            extra = sorted(set(self) - set(params))
            raise DimensionError(f"gradient paths differ from parameters (missing {missing}, extra {extra})")
        for path, grad in self.items():
            if grad.shape != params[path].shape:
                raise DimensionError.mismatch(f"gradient {path}", grad.shape, params[path].shape)
            if not np.isfinite(grad).all():
                raise InvariantViolation(f"gradient {path} is not finite")
        return self

    def is_zero(self) -> bool:
        return all(not np.any(grad) for grad in self.values())

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray]) -> "GradientSet":
        return cls({path: np.zeros_like(array) for path, array in params.items()})


def numerical_gradient(loss_fn: Callable[[], float], array: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """
    Central differences of a scalar loss with respect to every entry of `array`.

    `array` is perturbed in place and restored, so `loss_fn` must read it.
    Use 64-bit arrays: the oracle is only as good as the arithmetic.
    """
    grad = np.zeros(array.shape, dtype=np.float64)
    flat = array.reshape(-1)
    if not np.shares_memory(flat, array):
        raise InvariantViolation("numerical_gradient needs a contiguous array it can perturb in place")
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + step
        loss_plus = float(loss_fn())
        flat[index] = original - step
        loss_minus = float(loss_fn())
        flat[index] = original
        grad.reshape(-1)[index] = (loss_plus - loss_minus) / (2.0 * step)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = ABSOLUTE_FLOOR) -> float:
    """
    Largest relative error between two gradients.

    Entries whose oracle magnitude is below `floor` are compared absolutely
    and count as zero error when within the floor.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.shape != numeric.shape:
        raise DimensionError.mismatch("gradient comparison", analytic.shape, numeric.shape)
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    small = np.abs(numeric) < floor
    errors = np.where(small, np.where(diff <= floor, 0.0, diff / floor), diff / np.where(small, 1.0, scale))
    return float(errors.max()) if errors.size else 0.0


def check_gradients(loss_fn: Callable[[], float], params: Dict[str, np.ndarray],
                    analytic: Mapping[str, np.ndarray], step: float = FD_STEP) -> Dict[str, float]:
    """Max relative error per parameter path"""
    return {
        path: max_relative_error(analytic[path], numerical_gradient(loss_fn, array, step))
        for path, array in params.items()
    }
