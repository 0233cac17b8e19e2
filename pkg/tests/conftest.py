"""
Shared fixtures: finite checks on, repo root importable, seeded generators
and the whole-model gradient-check harness.
"""

import os
import sys
from pathlib import Path

os.environ["NOAH_CHECK_FINITE"] = "1"
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import numpy as np
import pytest

from autodiff.gradients import FD_STEP, check_gradients
from backbones.toy_backbone import BackboneConfig
from training.losses import cross_entropy
from training.model import build_model

ROOT = Path(__file__).resolve().parent.parent
KINK_MARGIN = 1e-3
# a central difference moves every stacked entry by far less than ten steps
TIE_MARGIN = 10 * FD_STEP


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def smoke_config_path():
    return ROOT / "config" / "quadrant_smoke.cfg"


def _clear_of_kinks(model, images) -> bool:
    """Every relu input clears KINK_MARGIN and, for max merge, every top-two gap clears TIE_MARGIN"""
    _, cache = model.forward(images)
    if min(float(np.abs(pre).min()) for pre in cache.backbone.pre_activations) <= KINK_MARGIN:
        return False
    if model.head_kind == "noah" and model.head.config.merge == "max":
        stacked = cache.head.stacked
        flat = np.sort(stacked.reshape(stacked.shape[0], -1, stacked.shape[3]), axis=1)
        return float((flat[:, -1] - flat[:, -2]).min()) > TIE_MARGIN
    return True


def smooth_instance(backbone_kind, widths, head_config, shape, in_channels=1, seeds=range(1000),
                    value_scale=1.0):
    """
    A 64-bit model plus inputs and labels that sit clear of every
    non-differentiable point. `value_scale` multiplies the NOAH value
    embeddings, which scales the key gradients with them.
    """
    for seed in seeds:
        rng = np.random.default_rng(seed)
        backbone = BackboneConfig(kind=backbone_kind, widths=widths, in_channels=in_channels, seed=seed)
        model = build_model(backbone, head_config, seed, dtype=np.float64)
        for layer in model.backbone.layers:
            layer.bias[:] = rng.uniform(0.05, 0.2, size=layer.bias.shape)
        if model.head_kind == "noah":
            for block in model.head.blocks:
                block.wv *= value_scale
        images = rng.uniform(0.1, 1.0, size=shape)
        labels = rng.integers(0, head_config.num_classes, size=shape[0])
        if _clear_of_kinks(model, images):
            return model, images, labels
    pytest.fail("no seed kept every pre-activation away from its kink")


def model_gradient_errors(model, images, labels):
    """Max relative error per parameter path of the cross-entropy gradient"""
    logits, cache = model.forward(images)
    _, grad_logits = cross_entropy(logits, labels)
    analytic = model.backward(cache, grad_logits)
    return check_gradients(lambda: cross_entropy(model.forward(images)[0], labels)[0],
                           model.named_arrays(), analytic)
