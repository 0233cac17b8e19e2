"""
Binary checkpoint format (little-endian)

    4s   magic "NOAH"
    u32  format version
    u32  config length, then UTF-8 JSON (head kind, head/backbone/train configs)
    u32  array count, then per array:
         u16 name length, name (UTF-8), u8 rank, u32 extents[rank], f32 data
    u32  CRC-32 of every preceding byte
"""

import json
import struct
import zlib
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from backbones.toy_backbone import BackboneConfig, BackboneLayer, BackboneParams
from config.settings import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from heads.gap_head import GapHeadParams
from heads.noah_config import GapConfig, NoahConfig
from heads.noah_head import NoahHeadParams, PocaBlockParams
from training.model import Model
from utils.errors import (CheckpointCorruptError, CheckpointFormatError, CheckpointTruncatedError,
                          CheckpointVersionError, NoahError)

PathLike = Union[str, Path]
ARRAY_DTYPE = np.dtype("<f4")


def encode_checkpoint(model: Model, train_config: Optional[Dict] = None) -> bytes:
    meta = {
        "head_kind": model.head_kind,
        "head": model.head.config.to_dict(),
        "channels": model.head.channels,
        "backbone": model.backbone.config.to_dict(),
        "train": train_config,
    }
    config_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    arrays = model.named_arrays()

    parts = [CHECKPOINT_MAGIC, struct.pack("<I", CHECKPOINT_VERSION),
             struct.pack("<I", len(config_bytes)), config_bytes, struct.pack("<I", len(arrays))]
    for name, array in arrays.items():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)) + encoded)
        parts.append(struct.pack("<B", array.ndim) + struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(np.ascontiguousarray(array, dtype=ARRAY_DTYPE).tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def save_checkpoint(path: PathLike, model: Model, train_config: Optional[Dict] = None) -> Path:
    path = Path(path)
    path.write_bytes(encode_checkpoint(model, train_config))
    return path


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.raw):
            raise CheckpointTruncatedError(
                f"checkpoint ends at byte {len(self.raw)}, needed {self.offset + size}")
        chunk = self.raw[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_checkpoint(raw: bytes) -> Tuple[Dict, Dict[str, np.ndarray]]:
    """(metadata, arrays) from checkpoint bytes, fully validated"""
    if len(raw) < len(CHECKPOINT_MAGIC) or raw[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError("not a NOAH checkpoint (bad or missing magic)")
    reader = _Reader(raw)
    reader.take(len(CHECKPOINT_MAGIC))
    (version,) = reader.unpack("<I")
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(f"checkpoint version {version}, this build reads {CHECKPOINT_VERSION}")

    (config_length,) = reader.unpack("<I")
    try:
        meta = json.loads(reader.take(config_length).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as error:
        raise CheckpointCorruptError(f"checkpoint config block is unreadable: {error}") from error

    arrays = {}
    (count,) = reader.unpack("<I")
    for _ in range(count):
        (name_length,) = reader.unpack("<H")
        try:
            name = reader.take(name_length).decode("utf-8")
        except UnicodeDecodeError as error:
            raise CheckpointCorruptError(f"checkpoint array name is unreadable: {error}") from error
        (rank,) = reader.unpack("<B")
        shape = reader.unpack(f"<{rank}I")
        size = int(np.prod(shape, dtype=np.int64)) * ARRAY_DTYPE.itemsize
        arrays[name] = np.frombuffer(reader.take(size), dtype=ARRAY_DTYPE).reshape(shape).astype(np.float32)

    remaining = len(raw) - reader.offset
    if remaining < 4:
        raise CheckpointTruncatedError("checkpoint is missing its CRC trailer")
    if remaining > 4:
        raise CheckpointFormatError(f"{remaining - 4} unexpected bytes before the CRC trailer")
    (stored,) = struct.unpack("<I", raw[-4:])
    if stored != zlib.crc32(raw[:-4]):
        raise CheckpointCorruptError("checkpoint CRC mismatch")
    return meta, arrays


def _array(arrays: Dict[str, np.ndarray], name: str) -> np.ndarray:
    if name not in arrays:
        raise CheckpointFormatError(f"checkpoint has no array {name!r}")
    return arrays[name]


def model_from_arrays(meta: Dict, arrays: Dict[str, np.ndarray]) -> Model:
    backbone_config = BackboneConfig.from_dict(meta["backbone"])
    layers = [
        BackboneLayer(weight=_array(arrays, f"backbone.layers.{index}.weight"),
                      bias=_array(arrays, f"backbone.layers.{index}.bias"),
                      stride=backbone_config.strides[index] if backbone_config.strides else 1)
        for index in range(len(backbone_config.widths))
    ]
    backbone = BackboneParams(config=backbone_config, layers=layers)

    if meta["head_kind"] == "noah":
        config = NoahConfig.from_dict(meta["head"])
        blocks = []
        for index in range(config.num_groups):
            path = f"head.blocks.{index}"
            block = PocaBlockParams(wk=_array(arrays, f"{path}.wk"), wv=_array(arrays, f"{path}.wv"))
            if config.use_bias:
                block.bias_k = _array(arrays, f"{path}.bias_k")
                block.bias_v = _array(arrays, f"{path}.bias_v")
            blocks.append(block)
        head = NoahHeadParams(config=config, channels=meta["channels"], blocks=blocks)
    elif meta["head_kind"] == "gap":
        config = GapConfig.from_dict(meta["head"])
        bias = _array(arrays, "head.bias") if config.use_bias else None
        head = GapHeadParams(config=config, channels=meta["channels"],
                             weight=_array(arrays, "head.weight"), bias=bias)
    else:
        raise CheckpointFormatError(f"unknown head kind {meta['head_kind']!r}")

    model = Model(backbone=backbone, head=head)
    if set(model.named_arrays()) != set(arrays):
        raise CheckpointFormatError("checkpoint arrays do not match the stored configuration")
    return model


def load_checkpoint(path: PathLike) -> Tuple[Model, Dict]:
    """(model, metadata); any shape or config inconsistency is a format error"""
    meta, arrays = decode_checkpoint(Path(path).read_bytes())
    try:
        return model_from_arrays(meta, arrays), meta
    except CheckpointFormatError:
        raise
    except (NoahError, KeyError, TypeError) as error:
        raise CheckpointFormatError(f"checkpoint does not describe a valid model: {error}") from error
