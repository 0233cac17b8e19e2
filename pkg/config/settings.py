"""
Settings for the NOAH head toolkit
Defaults, presets and environment toggles shared by every package
"""

import os

# Assert finiteness after every public tensor op (tests turn this on)
CHECK_FINITE = os.environ.get("NOAH_CHECK_FINITE", "0") == "1"

# Head presets: (groups N, key ratio r)
DEFAULT_GROUPS = 4
DEFAULT_KEY_RATIO = 0.5
RESNET18_PRESET = (4, 0.5)
RESNET50_PRESET = (4, 0.125)
SMALL_BACKBONE_PRESET = (8, 0.25)
SMALL_BACKBONE_PARAMS = 5_000_000

ATTENTION_AXES = ("spatial", "channel")
ACTIVATIONS = ("softmax", "sigmoid")
MERGE_MODES = ("sum", "mean", "max")
HEAD_KINDS = ("noah", "gap")

# Backbone defaults
BACKBONE_KINDS = ("pointwise", "conv3x3")
DEFAULT_BACKBONE_WIDTHS = (16, 32)
DEFAULT_CONV_STRIDES = (2, 2)

# Quadrant dataset defaults
IMAGE_SIZE = 28
DEFAULT_GLYPHS = ("filled_square", "hollow_square")
GLYPH_SIZE = 8
POSITION_JITTER = 2
NOISE_AMPLITUDE = 0.05

# SGD defaults
LEARNING_RATE = 0.05
MOMENTUM = 0.9
WEIGHT_DECAY = 1e-4
LR_SCHEDULES = ("constant", "step", "cosine", "linear")

# Checkpoint format
CHECKPOINT_MAGIC = b"NOAH"
CHECKPOINT_VERSION = 1

# Metrics CSV schema
METRICS_COLUMNS = ["epoch", "train_loss", "train_top1", "eval_top1", "seconds"]

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

# Every key a run config may set. The default's type decides parsing.
RUN_DEFAULTS = {
    # general
    "seed": 0,
    "head": "noah",
    "dataset": "quadrant",
    "train_images": "",
    "train_labels": "",
    "eval_images": "",
    "eval_labels": "",
    "checkpoint": "",
    # quadrant data
    "train_count": 4000,
    "eval_count": 800,
    "image_size": IMAGE_SIZE,
    "glyphs": ",".join(DEFAULT_GLYPHS),
    "noise": NOISE_AMPLITUDE,
    "jitter": POSITION_JITTER,
    # backbone
    "backbone": "pointwise",
    "backbone_widths": ",".join(str(w) for w in DEFAULT_BACKBONE_WIDTHS),
    "backbone_strides": "",
    # head
    "num_classes": 8,
    "groups": DEFAULT_GROUPS,
    "key_ratio": DEFAULT_KEY_RATIO,
    "attention_axis": "spatial",
    "activation": "softmax",
    "merge": "sum",
    "shared_attention": False,
    "second_split": True,
    "use_bias": False,
    # training
    "epochs": 10,
    "batch_size": 32,
    "lr": LEARNING_RATE,
    "momentum": MOMENTUM,
    "weight_decay": WEIGHT_DECAY,
    "lr_schedule": "constant",
    "lr_step_epochs": 30,
    "lr_decay": 0.1,
    "freeze_backbone_epochs": 0,
    "log_wall_time": True,
    "verbose": True,
    # cost / bench geometry
    "channels": 2048,
    "height": 7,
    "width": 7,
    "batch": 32,
    "repeats": 20,
    "warmup": 5,
    # viz
    "block": 0,
    "categories": "",
    "samples": 1,
}
