"""
Images plus integer labels, the unit every collector returns
"""

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from utils.errors import ConsistencyError, DataFormatError, LabelRangeError


@dataclass(frozen=True)
class LabeledBatch:
    images: np.ndarray   # [B, H, W, 1], values in [0, 1]
    labels: np.ndarray   # [B], int64

    def __post_init__(self):
        if self.images.ndim != 4:
            raise DataFormatError(f"images must be [B,H,W,C], got shape {self.images.shape}")
        if self.labels.ndim != 1:
            raise DataFormatError(f"labels must be a vector, got shape {self.labels.shape}")
        if self.images.shape[0] != self.labels.shape[0]:
            raise ConsistencyError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels")
        self.images.setflags(write=False)
        self.labels.setflags(write=False)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def validate_labels(self, num_classes: int) -> "LabeledBatch":
        """Reject labels outside [0, M)"""
        if len(self) and (self.labels.min() < 0 or self.labels.max() >= num_classes):
            raise LabelRangeError(
                f"labels span [{self.labels.min()}, {self.labels.max()}] but the model has M={num_classes}")
        return self

    def subset(self, indices) -> "LabeledBatch":
        return LabeledBatch(images=self.images[indices].copy(), labels=self.labels[indices].copy())

    def batches(self, batch_size: int, rng: Optional[np.random.Generator] = None) -> Iterator["LabeledBatch"]:
        """Consecutive mini-batches, shuffled when a generator is given"""
        order = rng.permutation(len(self)) if rng is not None else np.arange(len(self))
        for start in range(0, len(self), batch_size):
            yield self.subset(order[start:start + batch_size])

    def class_histogram(self, num_classes: int) -> np.ndarray:
        return np.bincount(self.labels, minlength=num_classes)
