"""
Baseline head: global average pooling followed by a linear map to M logits
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from autodiff.gradients import GradientSet
from autodiff.tensor_ops import (STORAGE_DTYPE, as_tensor, conv1x1_backward, conv1x1_forward,
                                 reduce_spatial, reduce_spatial_backward)
from heads.noah_config import GapConfig
from utils.errors import ContractError, DimensionError


@dataclass
class GapHeadParams:
    config: GapConfig
    channels: int
    weight: np.ndarray              # [C, M]
    bias: Optional[np.ndarray] = None

    kind = "gap"

    def __post_init__(self):
        expected = (self.channels, self.config.num_classes)
        if self.weight.shape != expected:
            raise DimensionError.mismatch("GAP weight", self.weight.shape, expected)
        if self.config.use_bias != (self.bias is not None):
            raise DimensionError("bias array must be present exactly when use_bias is set")

    def named_arrays(self, prefix: str = "head") -> Dict[str, np.ndarray]:
        arrays = {f"{prefix}.weight": self.weight}
        if self.bias is not None:
            arrays[f"{prefix}.bias"] = self.bias
        return arrays


@dataclass
class GapCache:
    features: np.ndarray
    pooled: np.ndarray
    weight: np.ndarray
    use_bias: bool


def init_gap(config: GapConfig, channels: int, seed: int, dtype=STORAGE_DTYPE) -> GapHeadParams:
    rng = np.random.default_rng(seed)
    bound = np.sqrt(1.0 / channels)
    weight = rng.uniform(-bound, bound, size=(channels, config.num_classes)).astype(dtype)
    bias = np.zeros(config.num_classes, dtype=dtype) if config.use_bias else None
    return GapHeadParams(config=config, channels=channels, weight=weight, bias=bias)


def gap_forward(features, params: GapHeadParams) -> Tuple[np.ndarray, GapCache]:
    """logits = W . GAP(F) + bias"""
    features = as_tensor(features)
    if features.shape[3] != params.channels:
        raise DimensionError.mismatch("GAP input channels", features.shape[3:], (params.channels,))
    pooled = reduce_spatial(features, "mean")
    out = conv1x1_forward(pooled, params.weight, params.bias)
    cache = GapCache(features=features, pooled=pooled, weight=params.weight.copy(),
                     use_bias=params.bias is not None)
    return out[:, 0, 0, :], cache


def gap_backward(cache: GapCache, upstream, params: Optional[GapHeadParams] = None,
                 prefix: str = "head") -> Tuple[GradientSet, np.ndarray]:
    if not isinstance(cache, GapCache):
        raise ContractError(f"gap_backward needs a cache from gap_forward, got {type(cache).__name__}")
    if params is not None and not np.array_equal(params.weight, cache.weight):
        raise ContractError("stale cache: head weights changed since the forward pass")
    upstream = np.asarray(upstream)
    expected = (cache.features.shape[0], cache.weight.shape[1])
    if upstream.shape != expected:
        raise DimensionError.mismatch("GAP upstream", upstream.shape, expected)

    grad_pooled, grad_weight, grad_bias = conv1x1_backward(cache.pooled, cache.weight, upstream[:, None, None, :])
    grads = GradientSet({f"{prefix}.weight": grad_weight})
    if cache.use_bias:
        grads[f"{prefix}.bias"] = grad_bias
    return grads, reduce_spatial_backward(cache.features, "mean", grad_pooled)


def gap_pixel_logits(features, params: GapHeadParams) -> np.ndarray:
    """Mean over positions of the per-pixel logits W . F_ij (the rewritten GAP head)"""
    per_pixel = conv1x1_forward(features, params.weight, params.bias)
    return reduce_spatial(per_pixel, "mean")[:, 0, 0, :]
