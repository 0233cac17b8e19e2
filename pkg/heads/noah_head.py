"""
NOAH head: N parallel pairwise object category attention (POCA) blocks

Each block reads its own even-sized channel group F_n (first-level split),
cuts it into key and value channels by the ratio r (second-level split),
and computes

    A_n = activation(F_kn * W_kn)      attention, [B,H,W,M]
    V_n = F_vn * W_vn                  values,    [B,H,W,M]
    Z_n = A_n (Hadamard) V_n           local POCA tensor

The N local tensors are merged jointly over (n, i, j) into [B, M] logits.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from autodiff.gradients import GradientSet
from autodiff.tensor_ops import (STORAGE_DTYPE, as_tensor, channel_concat, channel_softmax,
                                 channel_softmax_backward, channel_split, channel_tile,
                                 channel_tile_backward, conv1x1_backward, conv1x1_forward,
                                 hadamard, hadamard_backward, reduce_spatial,
                                 reduce_spatial_backward, sigmoid, sigmoid_backward,
                                 spatial_softmax, spatial_softmax_backward)
from heads.noah_config import NoahConfig, SplitPlan
from utils.errors import ContractError, DimensionError


@dataclass
class PocaBlockParams:
    wk: np.ndarray
    wv: np.ndarray
    bias_k: Optional[np.ndarray] = None
    bias_v: Optional[np.ndarray] = None

    def named_arrays(self, prefix: str) -> Dict[str, np.ndarray]:
        arrays = {f"{prefix}.wk": self.wk, f"{prefix}.wv": self.wv}
        if self.bias_k is not None:
            arrays[f"{prefix}.bias_k"] = self.bias_k
            arrays[f"{prefix}.bias_v"] = self.bias_v
        return arrays


@dataclass
class NoahHeadParams:
    config: NoahConfig
    channels: int
    blocks: List[PocaBlockParams]

    kind = "noah"

    def __post_init__(self):
        plan = self.config.plan(self.channels)
        if len(self.blocks) != self.config.num_groups:
            raise DimensionError(f"expected {self.config.num_groups} POCA blocks, got {len(self.blocks)}")
        for block in self.blocks:
            if block.wk.shape != (plan.key_in, plan.key_out):
                raise DimensionError.mismatch("key embedding", block.wk.shape, (plan.key_in, plan.key_out))
            if block.wv.shape != (plan.value_in, plan.value_out):
                raise DimensionError.mismatch("value embedding", block.wv.shape, (plan.value_in, plan.value_out))
            if self.config.use_bias != (block.bias_k is not None and block.bias_v is not None):
                raise DimensionError("bias arrays must be present exactly when use_bias is set")

    @property
    def plan(self) -> SplitPlan:
        return self.config.plan(self.channels)

    def named_arrays(self, prefix: str = "head") -> Dict[str, np.ndarray]:
        arrays = {}
        for index, block in enumerate(self.blocks):
            arrays.update(block.named_arrays(f"{prefix}.blocks.{index}"))
        return arrays


@dataclass
class PocaBlockCache:
    key_input: np.ndarray
    value_input: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    attention: np.ndarray        # [B,H,W,M] or [B,H,W,1] when shared
    attention_full: np.ndarray   # attention as used in the Hadamard product
    values: np.ndarray
    local: np.ndarray


@dataclass
class NoahCache:
    config: NoahConfig
    channels: int
    input_shape: Tuple[int, ...]
    blocks: List[PocaBlockCache] = field(default_factory=list)
    stacked: Optional[np.ndarray] = None   # [B, N*H, W, M]


def init_noah(config: NoahConfig, channels: int, seed: int, dtype=STORAGE_DTYPE) -> NoahHeadParams:
    """Uniform fan-in initialization, +-sqrt(1/Cin) per matrix, biases zero"""
    plan = config.plan(channels)
    rng = np.random.default_rng(seed)

    def uniform(rows: int, cols: int) -> np.ndarray:
        bound = np.sqrt(1.0 / rows)
        return rng.uniform(-bound, bound, size=(rows, cols)).astype(dtype)

    blocks = []
    for _ in range(config.num_groups):
        block = PocaBlockParams(wk=uniform(plan.key_in, plan.key_out),
                                wv=uniform(plan.value_in, plan.value_out))
        if config.use_bias:
            block.bias_k = np.zeros(plan.key_out, dtype=dtype)
            block.bias_v = np.zeros(plan.value_out, dtype=dtype)
        blocks.append(block)
    return NoahHeadParams(config=config, channels=channels, blocks=blocks)


def _activate(key_logits: np.ndarray, config: NoahConfig) -> np.ndarray:
    if config.activation == "sigmoid":
        return sigmoid(key_logits)
    if config.attention_axis == "channel":
        return channel_softmax(key_logits)
    return spatial_softmax(key_logits)


def _activate_backward(attention: np.ndarray, upstream: np.ndarray, config: NoahConfig) -> np.ndarray:
    if config.activation == "sigmoid":
        return sigmoid_backward(attention, upstream)
    if config.attention_axis == "channel":
        return channel_softmax_backward(attention, upstream)
    return spatial_softmax_backward(attention, upstream)


def noah_forward(features, params: NoahHeadParams) -> Tuple[np.ndarray, NoahCache]:
    """F [B,H,W,C] -> (logits [B,M], cache)"""
    features = as_tensor(features)
    if features.shape[3] != params.channels:
        raise DimensionError.mismatch("NOAH input channels", features.shape[3:], (params.channels,))
    config, plan = params.config, params.plan
    cache = NoahCache(config=config, channels=params.channels, input_shape=features.shape)

    groups = channel_split(features, [plan.group] * config.num_groups)
    locals_ = []
    for block, group in zip(params.blocks, groups):
        if plan.shared_input:
            key_input = value_input = group
        else:
            key_input, value_input = channel_split(group, [plan.key_in, plan.value_in])

        attention = _activate(conv1x1_forward(key_input, block.wk, block.bias_k), config)
        values = conv1x1_forward(value_input, block.wv, block.bias_v)
        attention_full = channel_tile(attention, config.num_classes) if config.shared_single_attention else attention
        local = hadamard(attention_full, values)

        locals_.append(local)
        cache.blocks.append(PocaBlockCache(
            key_input=key_input, value_input=value_input,
            wk=block.wk.copy(), wv=block.wv.copy(),
            attention=attention, attention_full=attention_full,
            values=values, local=local,
        ))

    # Stacking along rows makes one reduction cover every (n, i, j)
    cache.stacked = np.concatenate(locals_, axis=1)
    merged = reduce_spatial(cache.stacked, config.merge)
    return merged[:, 0, 0, :], cache


def _check_fresh(cache: NoahCache, params: NoahHeadParams):
    if params.config != cache.config or params.channels != cache.channels:
        raise ContractError("cache was produced by a head with a different configuration")
    for block, block_cache in zip(params.blocks, cache.blocks):
        if not (np.array_equal(block.wk, block_cache.wk) and np.array_equal(block.wv, block_cache.wv)):
            raise ContractError("stale cache: head weights changed since the forward pass")


def noah_backward(cache: NoahCache, upstream, params: Optional[NoahHeadParams] = None,
                  prefix: str = "head") -> Tuple[GradientSet, np.ndarray]:
    """Returns (gradients keyed like named_arrays, grad of the input F)"""
    if not isinstance(cache, NoahCache) or cache.stacked is None:
        raise ContractError(f"noah_backward needs a cache from noah_forward, got {type(cache).__name__}")
    if params is not None:
        _check_fresh(cache, params)
    config = cache.config
    batch = cache.input_shape[0]
    upstream = np.asarray(upstream)
    if upstream.shape != (batch, config.num_classes):
        raise DimensionError.mismatch("NOAH upstream", upstream.shape, (batch, config.num_classes))

    grad_stacked = reduce_spatial_backward(cache.stacked, config.merge, upstream[:, None, None, :])
    grad_locals = np.split(grad_stacked, config.num_groups, axis=1)

    grads = GradientSet()
    grad_groups = []
    for index, (block, grad_local) in enumerate(zip(cache.blocks, grad_locals)):
        grad_attention_full, grad_values = hadamard_backward(block.attention_full, block.values, grad_local)
        grad_attention = (channel_tile_backward(grad_attention_full)
                          if config.shared_single_attention else grad_attention_full)
        grad_key_logits = _activate_backward(block.attention, grad_attention, config)

        grad_key_in, grad_wk, grad_bk = conv1x1_backward(block.key_input, block.wk, grad_key_logits)
        grad_value_in, grad_wv, grad_bv = conv1x1_backward(block.value_input, block.wv, grad_values)

        path = f"{prefix}.blocks.{index}"
        grads[f"{path}.wk"] = grad_wk
        grads[f"{path}.wv"] = grad_wv
        if config.use_bias:
            grads[f"{path}.bias_k"] = grad_bk
            grads[f"{path}.bias_v"] = grad_bv

        if block.key_input is block.value_input:
            grad_groups.append(grad_key_in + grad_value_in)
        else:
            grad_groups.append(channel_concat([grad_key_in, grad_value_in]))

    return grads, channel_concat(grad_groups)
