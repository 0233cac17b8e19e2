"""
Head hyper-parameters and the two-level split arithmetic
"""

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, Tuple

from config.settings import (ACTIVATIONS, ATTENTION_AXES, DEFAULT_GROUPS, DEFAULT_KEY_RATIO, MERGE_MODES,
                             RESNET18_PRESET, RESNET50_PRESET, SMALL_BACKBONE_PARAMS, SMALL_BACKBONE_PRESET)
from utils.errors import ConfigurationError, InvariantViolation


@dataclass(frozen=True)
class SplitPlan:
    """Channel bookkeeping of one POCA block for a bound input width C"""

    group: int          # C / N
    key_in: int         # channels feeding the key embedding
    value_in: int       # channels feeding the value embedding
    key_out: int        # M, or 1 for the shared single attention
    value_out: int      # M
    shared_input: bool  # both embeddings read the whole group


@dataclass(frozen=True)
class NoahConfig:
    num_classes: int
    num_groups: int = DEFAULT_GROUPS
    key_ratio: float = DEFAULT_KEY_RATIO
    attention_axis: str = "spatial"
    activation: str = "softmax"
    merge: str = "sum"
    shared_single_attention: bool = False
    second_split: bool = True
    use_bias: bool = False

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigurationError(f"need at least 2 categories, got M={self.num_classes}")
        if self.num_groups < 1:
            raise ConfigurationError(f"need at least 1 group, got N={self.num_groups}")
        if not 0 < self.key_ratio < 1:
            raise ConfigurationError(f"key ratio r must lie in (0, 1), got {self.key_ratio}")
        if self.attention_axis not in ATTENTION_AXES:
            raise ConfigurationError(f"attention_axis must be one of {ATTENTION_AXES}, got {self.attention_axis!r}")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.merge not in MERGE_MODES:
            raise ConfigurationError(f"merge must be one of {MERGE_MODES}, got {self.merge!r}")
        if self.shared_single_attention and self.attention_axis == "channel":
            raise ConfigurationError("a single shared attention map cannot be normalized along channels")

    @property
    def ratio(self) -> Fraction:
        # Exact rational so floor/ceil never suffer from float rounding
        return Fraction(self.key_ratio).limit_denominator(1_000_000)

    def split_sizes(self, channels: int) -> Tuple[int, int, int]:
        """(C/N, C_k, C_v) for the standard second-level split"""
        if channels < 1 or channels % self.num_groups != 0:
            raise ConfigurationError(
                f"C={channels} is not divisible by N={self.num_groups} (groups must be even-sized)")
        group = channels // self.num_groups
        key = math.floor(self.ratio * group)
        value = math.ceil((1 - self.ratio) * group)
        if key < 1 or value < 1:
            raise ConfigurationError(
                f"degenerate split for C/N={group}, r={self.key_ratio}: C_k={key}, C_v={value}")
        if key + value != group:
            raise InvariantViolation(f"C_k + C_v = {key + value} != C/N = {group}")
        return group, key, value

    def plan(self, channels: int) -> SplitPlan:
        group, key, value = self.split_sizes(channels)
        shared_input = self.shared_single_attention or not self.second_split
        return SplitPlan(
            group=group,
            key_in=group if shared_input else key,
            value_in=group if shared_input else value,
            key_out=1 if self.shared_single_attention else self.num_classes,
            value_out=self.num_classes,
            shared_input=shared_input,
        )

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "NoahConfig":
        return cls(**data)


@dataclass(frozen=True)
class GapConfig:
    num_classes: int
    use_bias: bool = False

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigurationError(f"need at least 2 categories, got M={self.num_classes}")

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "GapConfig":
        return cls(**data)


def suggest_group_settings(channels: int, backbone_params: int) -> Tuple[int, float]:
    """
    Pick (N, r) by the rule of thumb: smaller backbones get more groups,
    wider groups get a smaller key ratio.
    """
    preset = SMALL_BACKBONE_PRESET if backbone_params < SMALL_BACKBONE_PARAMS else RESNET18_PRESET
    groups = preset[0]
    if channels % groups != 0:
        groups = 4 if channels % 4 == 0 else 1
    if channels // groups >= 512:
        return groups, RESNET50_PRESET[1]
    return groups, (SMALL_BACKBONE_PRESET[1] if groups == SMALL_BACKBONE_PRESET[0] else RESNET18_PRESET[1])
