"""
Binary PGM (P5) grayscale images and the map normalizations used for them
"""

from pathlib import Path
from typing import Union

import numpy as np

from utils.errors import DataFormatError

PathLike = Union[str, Path]


def normalize_min_max(values: np.ndarray) -> np.ndarray:
    """Affine map to [0, 1]; a constant map becomes all zeros"""
    values = np.asarray(values, dtype=np.float64)
    low, high = values.min(), values.max()
    if high - low <= 0:
        return np.zeros_like(values)
    return (values - low) / (high - low)


def normalize_symmetric(values: np.ndarray) -> np.ndarray:
    """Scale by max |x| into [-1, 1], then map to [0, 1] (zero lands on 0.5)"""
    values = np.asarray(values, dtype=np.float64)
    peak = np.abs(values).max()
    if peak <= 0:
        return np.full_like(values, 0.5)
    return (values / peak + 1.0) / 2.0


def quantize(unit: np.ndarray) -> np.ndarray:
    """[0, 1] floats to 8-bit gray levels"""
    return np.clip(np.rint(np.asarray(unit) * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path: PathLike, pixels: np.ndarray) -> Path:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise DataFormatError(f"PGM export needs a 2-D uint8 array, got {pixels.dtype} {pixels.shape}")
    height, width = pixels.shape
    path = Path(path)
    path.write_bytes(f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes())
    return path


def read_pgm(path: PathLike) -> np.ndarray:
    """Parse a binary P5 file with maxval 255 (comments allowed in the header)"""
    raw = Path(path).read_bytes()
    fields, offset = [], 0
    while len(fields) < 4:
        while offset < len(raw) and raw[offset:offset + 1].isspace():
            offset += 1
        if offset < len(raw) and raw[offset:offset + 1] == b"#":
            while offset < len(raw) and raw[offset:offset + 1] != b"\n":
                offset += 1
            continue
        start = offset
        while offset < len(raw) and not raw[offset:offset + 1].isspace():
            offset += 1
        if start == offset:
            raise DataFormatError(f"{path}: PGM header is incomplete")
        fields.append(raw[start:offset])
    offset += 1  # single whitespace before the raster

    if fields[0] != b"P5":
        raise DataFormatError(f"{path}: not a binary PGM (magic {fields[0]!r})")
    width, height, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise DataFormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    raster = raw[offset:]
    if len(raster) != width * height:
        raise DataFormatError(f"{path}: raster has {len(raster)} bytes, expected {width * height}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
