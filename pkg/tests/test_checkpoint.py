import numpy as np
import pytest

from backbones.toy_backbone import BackboneConfig
from heads.noah_config import GapConfig, NoahConfig
from training.checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from training.model import build_model
from utils.errors import (CheckpointCorruptError, CheckpointFormatError, CheckpointTruncatedError,
                          CheckpointVersionError)

MODELS = [
    (BackboneConfig(kind="pointwise", widths=(4, 8)), NoahConfig(num_classes=3, num_groups=2)),
    (BackboneConfig(kind="pointwise", widths=(4, 8)), NoahConfig(num_classes=3, num_groups=2, use_bias=True,
                                                                  shared_single_attention=True)),
    (BackboneConfig(kind="conv3x3", widths=(4, 8), strides=(2, 1)), GapConfig(num_classes=3, use_bias=True)),
]


@pytest.fixture
def checkpoint_path(tmp_path):
    backbone, head = MODELS[0]
    return save_checkpoint(tmp_path / "model.ckpt", build_model(backbone, head, seed=0), {"epochs": 1})


@pytest.mark.parametrize("backbone, head", MODELS)
def test_round_trip_is_byte_exact(tmp_path, rng, backbone, head):
    model = build_model(backbone, head, seed=4)
    first = save_checkpoint(tmp_path / "a.ckpt", model, {"seed": 4})
    loaded, meta = load_checkpoint(first)
    second = save_checkpoint(tmp_path / "b.ckpt", loaded, meta["train"])
    assert first.read_bytes() == second.read_bytes()
    assert meta["head_kind"] == model.head_kind
    images = rng.uniform(0.0, 1.0, size=(2, 6, 6, 1)).astype(np.float32)
    np.testing.assert_array_equal(loaded.logits(images), model.logits(images))


def test_empty_file_and_bad_magic(tmp_path, checkpoint_path):
    empty = tmp_path / "empty.ckpt"
    empty.write_bytes(b"")
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(empty)
    raw = bytearray(checkpoint_path.read_bytes())
    raw[0:4] = b"HAON"
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(bytes(raw))


def test_version_mismatch(checkpoint_path):
    raw = bytearray(checkpoint_path.read_bytes())
    raw[4:8] = (2).to_bytes(4, "little")
    with pytest.raises(CheckpointVersionError):
        decode_checkpoint(bytes(raw))


@pytest.mark.parametrize("cut", [2, 100])
def test_truncation(checkpoint_path, cut):
    with pytest.raises(CheckpointTruncatedError):
        decode_checkpoint(checkpoint_path.read_bytes()[:-cut])


def test_flipped_payload_byte_is_detected(checkpoint_path):
    raw = bytearray(checkpoint_path.read_bytes())
    raw[-10] ^= 0xFF
    with pytest.raises(CheckpointCorruptError):
        decode_checkpoint(bytes(raw))


def test_extra_bytes_before_trailer(checkpoint_path):
    raw = checkpoint_path.read_bytes()
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(raw[:-4] + b"\x00" + raw[-4:])


def test_encoding_is_deterministic():
    backbone, head = MODELS[1]
    assert encode_checkpoint(build_model(backbone, head, seed=1)) == encode_checkpoint(build_model(backbone, head, seed=1))
