"""
Deterministic training and evaluation loop
"""

import time
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from backbones.toy_backbone import BackboneConfig
from config.settings import HEAD_KINDS, LR_SCHEDULES, LEARNING_RATE, MOMENTUM, WEIGHT_DECAY
from data_collectors.labeled_batch import LabeledBatch
from heads.classifier import predict, top_k
from heads.noah_config import GapConfig, NoahConfig
from training.losses import cross_entropy
from training.metrics_tracker import MetricsTracker
from training.model import HeadConfig, Model, build_model
from training.optimizer import SGD, learning_rate_at
from utils.errors import ConfigurationError, DimensionError, InvariantViolation


@dataclass(frozen=True)
class TrainConfig:
    head: HeadConfig
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    epochs: int = 10
    batch_size: int = 32
    lr: float = LEARNING_RATE
    momentum: float = MOMENTUM
    weight_decay: float = WEIGHT_DECAY
    seed: int = 0
    lr_schedule: str = "constant"
    lr_step_epochs: int = 30
    lr_decay: float = 0.1
    freeze_backbone_epochs: int = 0
    log_wall_time: bool = True
    verbose: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            raise ConfigurationError(f"learning rate must be > 0, got {self.lr}")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigurationError(f"weight decay must be >= 0, got {self.weight_decay}")
        if self.lr_schedule not in LR_SCHEDULES:
            raise ConfigurationError(f"lr schedule must be one of {LR_SCHEDULES}, got {self.lr_schedule!r}")
        if self.freeze_backbone_epochs < 0:
            raise ConfigurationError("freeze_backbone_epochs must be >= 0")

    @property
    def head_kind(self) -> str:
        return "noah" if isinstance(self.head, NoahConfig) else "gap"

    @property
    def num_classes(self) -> int:
        return self.head.num_classes

    def to_dict(self) -> Dict:
        return {
            "head_kind": self.head_kind,
            "head": self.head.to_dict(),
            "backbone": self.backbone.to_dict(),
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "momentum": self.momentum,
            "weight_decay": self.weight_decay,
            "seed": self.seed,
            "lr_schedule": self.lr_schedule,
            "lr_step_epochs": self.lr_step_epochs,
            "lr_decay": self.lr_decay,
            "freeze_backbone_epochs": self.freeze_backbone_epochs,
            "log_wall_time": self.log_wall_time,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "TrainConfig":
        data = dict(data)
        kind = data.pop("head_kind")
        if kind not in HEAD_KINDS:
            raise ConfigurationError(f"head kind must be one of {HEAD_KINDS}, got {kind!r}")
        head_cls = NoahConfig if kind == "noah" else GapConfig
        data["head"] = head_cls.from_dict(data["head"])
        data["backbone"] = BackboneConfig.from_dict(data["backbone"])
        return cls(**data)


def evaluate(model, batch: LabeledBatch, batch_size: int = 256) -> Dict:
    """
    Top-1 (and top-5 when M >= 5) accuracy of argmax predictions, ties to
    the lowest category index. `model` only needs a `logits(images)` method.
    """
    if len(batch) == 0:
        return {"top1": float("nan"), "top5": None, "count": 0}
    correct1 = correct5 = 0
    classes = None
    for start in range(0, len(batch), batch_size):
        images = batch.images[start:start + batch_size]
        labels = batch.labels[start:start + batch_size]
        logits = model.logits(images)
        classes = logits.shape[1]
        correct1 += int(np.sum(predict(logits) == labels))
        if classes >= 5:
            correct5 += int(np.sum(np.any(top_k(logits, 5) == labels[:, None], axis=1)))
    return {
        "top1": correct1 / len(batch),
        "top5": correct5 / len(batch) if classes >= 5 else None,
        "count": len(batch),
    }


class Trainer:
    """Fixed-schedule SGD training of a backbone + head model"""

    def __init__(self, config: TrainConfig):
        self.config = config
        self.tracker = MetricsTracker()

    def build_model(self) -> Model:
        return build_model(self.config.backbone, self.config.head, self.config.seed)

    def _preflight(self, model: Model, train_batch: LabeledBatch, eval_batch: Optional[LabeledBatch]):
        """Surface shape and label errors before any epoch runs"""
        if len(train_batch) == 0:
            raise DimensionError("training set is empty")
        train_batch.validate_labels(model.num_classes)
        if eval_batch is not None:
            eval_batch.validate_labels(model.num_classes)
        model.forward(train_batch.images[:1])

    def fit(self, train_batch: LabeledBatch, eval_batch: Optional[LabeledBatch] = None,
            model: Optional[Model] = None) -> Tuple[Model, pd.DataFrame]:
        config = self.config
        model = model or self.build_model()
        self._preflight(model, train_batch, eval_batch)
        self.tracker = MetricsTracker(self.tracker.columns)
        optimizer = SGD(model.named_arrays(), momentum=config.momentum, weight_decay=config.weight_decay)

        if config.verbose:
            print("\n" + "=" * 60)
            print(f"🏋️ TRAINING {config.head_kind.upper()} HEAD ({config.backbone.kind} backbone)")
            print("=" * 60)

        for epoch in range(config.epochs):
            started = time.perf_counter()
            lr = learning_rate_at(epoch, config.lr, config.lr_schedule, config.epochs,
                                  config.lr_step_epochs, config.lr_decay)
            frozen = ("backbone.",) if epoch < config.freeze_backbone_epochs else ()
            rng = np.random.default_rng([config.seed, epoch])

            loss_sum, correct = 0.0, 0
            for batch in train_batch.batches(config.batch_size, rng):
                logits, cache = model.forward(batch.images)
                loss, grad_logits = cross_entropy(logits, batch.labels)
                optimizer.step(model.backward(cache, grad_logits), lr, frozen=frozen)
                loss_sum += loss * len(batch)
                correct += int(np.sum(predict(logits) == batch.labels))

            eval_top1 = evaluate(model, eval_batch)["top1"] if eval_batch is not None else float("nan")
            seconds = time.perf_counter() - started if config.log_wall_time else 0.0
            row = {
                "epoch": epoch + 1,
                "train_loss": loss_sum / len(train_batch),
                "train_top1": correct / len(train_batch),
                "eval_top1": eval_top1,
                "seconds": seconds,
            }
            if not self.tracker.track_epoch(row):
                raise InvariantViolation(f"metrics row does not match the tracked columns: {sorted(row)}")
            if config.verbose:
                print(f"  📊 epoch {row['epoch']:>3}  lr={lr:.4g}  loss={row['train_loss']:.4f}  "
                      f"train@1={row['train_top1']:.3f}  eval@1={eval_top1:.3f}  ({seconds:.1f}s)")

        if config.verbose:
            print("✅ Training complete")
        return model, self.tracker.to_frame()


def train(config: TrainConfig, train_batch: LabeledBatch,
          eval_batch: Optional[LabeledBatch] = None) -> Tuple[Model, pd.DataFrame]:
    return Trainer(config).fit(train_batch, eval_batch)
