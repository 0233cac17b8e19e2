"""
Backbone + head composed into one trainable classifier
"""

from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from autodiff.gradients import GradientSet
from autodiff.tensor_ops import STORAGE_DTYPE
from backbones.toy_backbone import (BackboneCache, BackboneConfig, BackboneParams, backbone_backward,
                                    backbone_forward, init_backbone)
from heads.gap_head import GapCache, GapHeadParams, gap_backward, gap_forward, init_gap
from heads.noah_config import GapConfig, NoahConfig
from heads.noah_head import NoahCache, NoahHeadParams, init_noah, noah_backward, noah_forward
from utils.errors import ConfigurationError, ContractError

HeadParams = Union[NoahHeadParams, GapHeadParams]
HeadConfig = Union[NoahConfig, GapConfig]


@dataclass
class ModelCache:
    backbone: BackboneCache
    head: Union[NoahCache, GapCache]


@dataclass
class Model:
    backbone: BackboneParams
    head: HeadParams

    def __post_init__(self):
        if self.backbone.config.out_channels != self.head.channels:
            raise ConfigurationError(
                f"backbone emits C={self.backbone.config.out_channels} but the head is bound to C={self.head.channels}")

    @property
    def head_kind(self) -> str:
        return self.head.kind

    @property
    def num_classes(self) -> int:
        return self.head.config.num_classes

    def named_arrays(self) -> Dict[str, np.ndarray]:
        arrays = self.backbone.named_arrays("backbone")
        arrays.update(self.head.named_arrays("head"))
        return arrays

    def forward(self, images) -> Tuple[np.ndarray, ModelCache]:
        features, backbone_cache = backbone_forward(images, self.backbone)
        if self.head_kind == "noah":
            logits, head_cache = noah_forward(features, self.head)
        else:
            logits, head_cache = gap_forward(features, self.head)
        return logits, ModelCache(backbone=backbone_cache, head=head_cache)

    def backward(self, cache: ModelCache, grad_logits) -> GradientSet:
        if not isinstance(cache, ModelCache):
            raise ContractError(f"Model.backward needs a ModelCache, got {type(cache).__name__}")
        if self.head_kind == "noah":
            head_grads, grad_features = noah_backward(cache.head, grad_logits, self.head, prefix="head")
        else:
            head_grads, grad_features = gap_backward(cache.head, grad_logits, self.head, prefix="head")
        backbone_grads, _ = backbone_backward(cache.backbone, grad_features, self.backbone, prefix="backbone")
        return backbone_grads.merge(head_grads).validate(self.named_arrays())

    def logits(self, images, batch_size: int = 256) -> np.ndarray:
        """Forward only, chunked over the batch axis"""
        chunks = [self.forward(images[start:start + batch_size])[0]
                  for start in range(0, images.shape[0], batch_size)]
        return np.concatenate(chunks, axis=0)


def init_head(config: HeadConfig, channels: int, seed: int, dtype=STORAGE_DTYPE) -> HeadParams:
    if isinstance(config, NoahConfig):
        return init_noah(config, channels, seed, dtype=dtype)
    return init_gap(config, channels, seed, dtype=dtype)


def build_model(backbone_config: BackboneConfig, head_config: HeadConfig, seed: int,
                dtype=STORAGE_DTYPE) -> Model:
    backbone = init_backbone(backbone_config, dtype=dtype)
    head = init_head(head_config, backbone_config.out_channels, seed, dtype=dtype)
    return Model(backbone=backbone, head=head)
