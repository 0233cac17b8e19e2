"""
Attention Visualizer
Export per-category attention, value and merged POCA maps as PGM images
"""

import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from reporting.pgm import normalize_min_max, normalize_symmetric, quantize, write_pgm
from training.model import Model
from utils.errors import IndexRangeError, UnsupportedHeadError


def quadrant_mass(slice_2d: np.ndarray) -> np.ndarray:
    """Summed mass of a [H, W] map per quadrant: top-left, top-right, bottom-left, bottom-right"""
    slice_2d = np.asarray(slice_2d, dtype=np.float64)
    mid_row, mid_col = slice_2d.shape[0] // 2, slice_2d.shape[1] // 2
    return np.array([
        slice_2d[:mid_row, :mid_col].sum(),
        slice_2d[:mid_row, mid_col:].sum(),
        slice_2d[mid_row:, :mid_col].sum(),
        slice_2d[mid_row:, mid_col:].sum(),
    ])


class AttentionVisualizer:
    """Render the maps a trained NOAH head computes for a batch of images"""

    def __init__(self, model: Model, out_dir: Union[str, Path]):
        if model.head_kind != "noah":
            raise UnsupportedHeadError(f"attention maps need a NOAH head, checkpoint holds {model.head_kind!r}")
        self.model = model
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def compute_maps(self, images: np.ndarray) -> Dict[str, List[np.ndarray]]:
        """Per block: attention [B,H,W,M or 1], values and local POCA tensors [B,H,W,M]"""
        _, cache = self.model.forward(images)
        blocks = cache.head.blocks
        return {
            "attention": [block.attention for block in blocks],
            "values": [block.values for block in blocks],
            "local": [block.local for block in blocks],
        }

    def _check_indices(self, block: int, categories: Sequence[int], samples: Sequence[int], batch: int):
        groups = self.model.head.config.num_groups
        classes = self.model.num_classes
        if not 0 <= block < groups:
            raise IndexRangeError(f"block index {block} outside [0, {groups})")
        bad = [m for m in categories if not 0 <= m < classes]
        if bad:
            raise IndexRangeError(f"categories {bad} outside [0, {classes})")
        bad = [s for s in samples if not 0 <= s < batch]
        if bad:
            raise IndexRangeError(f"sample indices {bad} outside [0, {batch})")

    def export(self, images: np.ndarray, block: int, categories: Optional[Sequence[int]] = None,
               labels: Optional[Sequence[int]] = None, samples: Optional[Sequence[int]] = None) -> List[Path]:
        """
        Write one attention map per (sample, block, category), plus the value
        map and the merged POCA map summed over all blocks. Without explicit
        categories each sample uses its own label.
        """
        samples = list(range(images.shape[0])) if samples is None else list(samples)
        if categories is None and labels is None:
            raise IndexRangeError("give categories or labels to choose the exported channels")
        self._check_indices(block, [], samples, images.shape[0])
        per_sample = {s: ([int(labels[s])] if categories is None else [int(m) for m in categories]) for s in samples}
        self._check_indices(block, sorted({m for ms in per_sample.values() for m in ms}), samples, images.shape[0])

        maps = self.compute_maps(images)
        shared = self.model.head.config.shared_single_attention
        merged = np.sum(maps["local"], axis=0)
        written = []
        for sample, categories_of_sample in per_sample.items():
            for category in categories_of_sample:
                channel = 0 if shared else category
                attention = maps["attention"][block][sample, :, :, channel]
                values = maps["values"][block][sample, :, :, category]
                stem = f"s{sample}_n{block}_m{category}"
                written.append(write_pgm(self.out_dir / f"attention_{stem}.pgm",
                                         quantize(normalize_min_max(attention))))
                written.append(write_pgm(self.out_dir / f"value_{stem}.pgm",
                                         quantize(normalize_symmetric(values))))
                written.append(write_pgm(self.out_dir / f"poca_s{sample}_m{category}.pgm",
                                         quantize(normalize_symmetric(merged[sample, :, :, category]))))
        print(f"✅ Exported {len(written)} maps to {self.out_dir}", file=sys.stderr)
        return written
