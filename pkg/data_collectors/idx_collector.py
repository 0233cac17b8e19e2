"""
Reader and writer for the IDX image/label format

File layout (big-endian):
    u32 magic      0x00000803 images (rank 3) / 0x00000801 labels (rank 1)
    u32 extent     one per dimension (count, then rows, cols for images)
    u8  payload    row-major
"""

import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from data_collectors.labeled_batch import LabeledBatch
from utils.errors import ConsistencyError, DataError, DataFormatError, TruncatedDataError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

PathLike = Union[str, Path]


def _read_idx(path: PathLike, magic: int, rank: int) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such data file")
    raw = path.read_bytes()
    if len(raw) < 4:
        raise DataFormatError(f"{path}: too short to hold an IDX header ({len(raw)} bytes)")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise DataFormatError(f"{path}: magic 0x{found:08x}, expected 0x{magic:08x}")
    header = 4 + 4 * rank
    if len(raw) < header:
        raise TruncatedDataError(f"{path}: header needs {header} bytes, file has {len(raw)}")
    dims = struct.unpack(f">{rank}I", raw[4:header])
    expected = int(np.prod(dims, dtype=np.int64))
    payload = len(raw) - header
    if payload < expected:
        raise TruncatedDataError(f"{path}: payload has {payload} bytes, dimensions {dims} need {expected}")
    if payload > expected:
        raise DataFormatError(f"{path}: {payload - expected} trailing bytes after the payload")
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def load_idx(images_path: PathLike, labels_path: PathLike) -> LabeledBatch:
    """Images scaled to [0, 1] as [B, H, W, 1]; labels as stored (0..255)"""
    images = _read_idx(images_path, IMAGE_MAGIC, 3)
    labels = _read_idx(labels_path, LABEL_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise ConsistencyError(
            f"{images_path} holds {images.shape[0]} images but {labels_path} holds {labels.shape[0]} labels")
    scaled = (images.astype(np.float32) / 255.0)[..., None]
    return LabeledBatch(images=scaled, labels=labels.astype(np.int64))


def save_idx(batch: LabeledBatch, images_path: PathLike, labels_path: PathLike) -> Tuple[Path, Path]:
    """Write a single-channel batch back to IDX (pixels rounded to 0..255)"""
    if batch.images.shape[3] != 1:
        raise DataFormatError(f"IDX stores single-channel images, got shape {batch.images.shape}")
    if len(batch) and (batch.labels.min() < 0 or batch.labels.max() > 255):
        raise DataFormatError("IDX labels must fit in one unsigned byte")
    count, rows, cols, _ = batch.images.shape
    pixels = np.clip(np.rint(batch.images[..., 0] * 255.0), 0, 255).astype(np.uint8)

    images_path, labels_path = Path(images_path), Path(labels_path)
    images_path.write_bytes(struct.pack(">IIII", IMAGE_MAGIC, count, rows, cols) + pixels.tobytes())
    labels_path.write_bytes(struct.pack(">II", LABEL_MAGIC, count) + batch.labels.astype(np.uint8).tobytes())
    return images_path, labels_path


class IdxCollector:
    """Load a labeled batch from an IDX image file and its label file"""

    def __init__(self, images_path: PathLike, labels_path: PathLike, verbose: bool = False):
        self.images_path = Path(images_path)
        self.labels_path = Path(labels_path)
        self.verbose = verbose

    def collect(self) -> LabeledBatch:
        if self.verbose:
            print(f"📥 Reading IDX data from {self.images_path.name} / {self.labels_path.name}...")
        batch = load_idx(self.images_path, self.labels_path)
        if self.verbose:
            print(f"✅ Loaded {len(batch)} images of {batch.images.shape[1]}x{batch.images.shape[2]}")
        return batch
