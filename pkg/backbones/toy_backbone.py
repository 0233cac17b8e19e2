"""
Toy feature extractors producing F [B,H,W,C] for the heads

pointwise: 1x1 convolutions + relu only, so every output pixel depends on
           the same input pixel alone (position-blind by construction)
conv3x3:   3x3 convolutions (zero padding 1, stride 1 or 2) + relu
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from autodiff.gradients import GradientSet
from autodiff.tensor_ops import (STORAGE_DTYPE, as_tensor, conv1x1_backward, conv1x1_forward,
                                 conv3x3_backward, conv3x3_forward, conv_output_extent,
                                 relu_backward, relu_forward)
from config.settings import BACKBONE_KINDS, DEFAULT_BACKBONE_WIDTHS, DEFAULT_CONV_STRIDES
from utils.errors import ConfigurationError, ContractError, DimensionError


@dataclass(frozen=True)
class BackboneConfig:
    kind: str = "pointwise"
    widths: Tuple[int, ...] = DEFAULT_BACKBONE_WIDTHS
    strides: Tuple[int, ...] = ()
    in_channels: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "strides", tuple(int(s) for s in self.strides))
        if self.kind not in BACKBONE_KINDS:
            raise ConfigurationError(f"backbone kind must be one of {BACKBONE_KINDS}, got {self.kind!r}")
        if not self.widths or min(self.widths) < 1:
            raise ConfigurationError(f"backbone widths must be a non-empty list of positive ints, got {self.widths}")
        if self.in_channels < 1:
            raise ConfigurationError(f"input channels must be >= 1, got {self.in_channels}")
        if self.kind == "pointwise" and self.strides:
            raise ConfigurationError("strides only apply to the conv3x3 backbone")
        if self.kind == "conv3x3":
            if not self.strides:
                defaults = DEFAULT_CONV_STRIDES + (1,) * max(0, len(self.widths) - len(DEFAULT_CONV_STRIDES))
                object.__setattr__(self, "strides", defaults[:len(self.widths)])
            if len(self.strides) != len(self.widths) or any(s not in (1, 2) for s in self.strides):
                raise ConfigurationError(f"need one stride (1 or 2) per layer, got {self.strides}")

    @property
    def out_channels(self) -> int:
        return self.widths[-1]

    def output_extent(self, size: int) -> int:
        for stride in self.strides:
            size = conv_output_extent(size, stride)
        return size

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["widths"] = list(self.widths)
        data["strides"] = list(self.strides)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "BackboneConfig":
        data = dict(data)
        data["widths"] = tuple(data["widths"])
        data["strides"] = tuple(data.get("strides", ()))
        return cls(**data)


@dataclass
class BackboneLayer:
    weight: np.ndarray          # [Cin, M] or [3, 3, Cin, M]
    bias: np.ndarray
    stride: int = 1


@dataclass
class BackboneParams:
    config: BackboneConfig
    layers: List[BackboneLayer]

    def __post_init__(self):
        if len(self.layers) != len(self.config.widths):
            raise DimensionError(f"expected {len(self.config.widths)} layers, got {len(self.layers)}")
        fan_in = self.config.in_channels
        for layer, width in zip(self.layers, self.config.widths):
            expected = (fan_in, width) if self.config.kind == "pointwise" else (3, 3, fan_in, width)
            if layer.weight.shape != expected:
                raise DimensionError.mismatch("backbone layer weight", layer.weight.shape, expected)
            if layer.bias.shape != (width,):
                raise DimensionError.mismatch("backbone layer bias", layer.bias.shape, (width,))
            fan_in = width

    def named_arrays(self, prefix: str = "backbone") -> Dict[str, np.ndarray]:
        arrays = {}
        for index, layer in enumerate(self.layers):
            arrays[f"{prefix}.layers.{index}.weight"] = layer.weight
            arrays[f"{prefix}.layers.{index}.bias"] = layer.bias
        return arrays


@dataclass
class BackboneCache:
    config: BackboneConfig
    inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    weights: List[np.ndarray] = field(default_factory=list)


def init_backbone(config: BackboneConfig, dtype=STORAGE_DTYPE) -> BackboneParams:
    """Uniform fan-in weights drawn from config.seed, zero biases"""
    rng = np.random.default_rng(config.seed)
    layers = []
    fan_in = config.in_channels
    for index, width in enumerate(config.widths):
        if config.kind == "pointwise":
            shape, stride = (fan_in, width), 1
        else:
            shape, stride = (3, 3, fan_in, width), config.strides[index]
        bound = np.sqrt(1.0 / (fan_in if config.kind == "pointwise" else 9 * fan_in))
        layers.append(BackboneLayer(
            weight=rng.uniform(-bound, bound, size=shape).astype(dtype),
            bias=np.zeros(width, dtype=dtype),
            stride=stride,
        ))
        fan_in = width
    return BackboneParams(config=config, layers=layers)


def backbone_forward(image, params: BackboneParams) -> Tuple[np.ndarray, BackboneCache]:
    image = as_tensor(image)
    config = params.config
    if image.shape[3] != config.in_channels:
        raise DimensionError.mismatch("backbone input channels", image.shape[3:], (config.in_channels,))

    cache = BackboneCache(config=config)
    x = image
    for layer in params.layers:
        cache.inputs.append(x)
        cache.weights.append(layer.weight.copy())
        if config.kind == "pointwise":
            pre = conv1x1_forward(x, layer.weight, layer.bias)
        else:
            pre = conv3x3_forward(x, layer.weight, layer.bias, stride=layer.stride)
        cache.pre_activations.append(pre)
        x = relu_forward(pre)
    return x, cache


def backbone_backward(cache: BackboneCache, grad_features, params: Optional[BackboneParams] = None,
                      prefix: str = "backbone") -> Tuple[GradientSet, np.ndarray]:
    """Returns (gradients keyed like named_arrays, grad of the input image)"""
    if not isinstance(cache, BackboneCache) or not cache.inputs:
        raise ContractError(f"backbone_backward needs a cache from backbone_forward, got {type(cache).__name__}")
    if params is not None:
        for layer, weight in zip(params.layers, cache.weights):
            if not np.array_equal(layer.weight, weight):
                raise ContractError("stale cache: backbone weights changed since the forward pass")
    grad = as_tensor(grad_features)
    if grad.shape != cache.pre_activations[-1].shape:
        raise DimensionError.mismatch("backbone upstream", grad.shape, cache.pre_activations[-1].shape)

    grads = GradientSet()
    config = cache.config
    for index in reversed(range(len(cache.inputs))):
        grad = relu_backward(cache.pre_activations[index], grad)
        if config.kind == "pointwise":
            grad, grad_weight, grad_bias = conv1x1_backward(cache.inputs[index], cache.weights[index], grad)
        else:
            grad, grad_weight, grad_bias = conv3x3_backward(
                cache.inputs[index], cache.weights[index], grad, stride=config.strides[index])
        grads[f"{prefix}.layers.{index}.weight"] = grad_weight
        grads[f"{prefix}.layers.{index}.bias"] = grad_bias
    return grads, grad
