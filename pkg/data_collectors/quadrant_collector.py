"""
Synthetic quadrant dataset: one glyph placed in one of four quadrants

Label = glyph_index * 4 + quadrant_index, so every glyph appears in every
quadrant and two classes with the same glyph differ only by where it sits.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from config.settings import DEFAULT_GLYPHS, GLYPH_SIZE, IMAGE_SIZE, NOISE_AMPLITUDE, POSITION_JITTER
from data_collectors.labeled_batch import LabeledBatch
from utils.errors import ConfigurationError

QUADRANTS = 4


def _glyph_stencils(size: int) -> Dict[str, np.ndarray]:
    filled = np.ones((size, size), dtype=np.float32)
    hollow = filled.copy()
    hollow[1:-1, 1:-1] = 0.0
    cross = np.zeros((size, size), dtype=np.float32)
    cross[size // 2 - 1:size // 2 + 1, :] = 1.0
    cross[:, size // 2 - 1:size // 2 + 1] = 1.0
    diagonal = np.maximum(np.eye(size, dtype=np.float32), np.fliplr(np.eye(size, dtype=np.float32)))
    return {"filled_square": filled, "hollow_square": hollow, "cross": cross, "diagonal": diagonal}


GLYPHS = _glyph_stencils(GLYPH_SIZE)


@dataclass(frozen=True)
class QuadrantSpec:
    image_size: int = IMAGE_SIZE
    glyphs: Tuple[str, ...] = DEFAULT_GLYPHS
    noise: float = NOISE_AMPLITUDE
    jitter: int = POSITION_JITTER
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "glyphs", tuple(self.glyphs))
        unknown = [g for g in self.glyphs if g not in GLYPHS]
        if unknown or not self.glyphs:
            raise ConfigurationError(f"unknown glyphs {unknown}; choose from {sorted(GLYPHS)}")
        if self.image_size % 2 != 0:
            raise ConfigurationError(f"image size must be even, got {self.image_size}")
        if self.noise < 0:
            raise ConfigurationError(f"noise amplitude must be >= 0, got {self.noise}")
        quadrant = self.image_size // 2
        margin = (quadrant - GLYPH_SIZE) // 2
        if self.jitter < 0 or margin - self.jitter < 0:
            raise ConfigurationError(
                f"a {GLYPH_SIZE}px glyph with jitter {self.jitter} does not fit a {quadrant}px quadrant")

    @property
    def num_classes(self) -> int:
        return len(self.glyphs) * QUADRANTS

    @property
    def quadrant_size(self) -> int:
        return self.image_size // 2

    def glyph_origin(self, quadrant: int, jitter: Tuple[int, int]) -> Tuple[int, int]:
        """Top-left pixel of the glyph for a quadrant (0 TL, 1 TR, 2 BL, 3 BR)"""
        margin = (self.quadrant_size - GLYPH_SIZE) // 2
        row = (quadrant // 2) * self.quadrant_size + margin + jitter[0]
        col = (quadrant % 2) * self.quadrant_size + margin + jitter[1]
        return row, col


def render_sample(spec: QuadrantSpec, glyph: int, quadrant: int, jitter: Tuple[int, int],
                  noise_rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """One [H, W] image in [0, 1]"""
    image = np.zeros((spec.image_size, spec.image_size), dtype=np.float32)
    row, col = spec.glyph_origin(quadrant, jitter)
    image[row:row + GLYPH_SIZE, col:col + GLYPH_SIZE] = GLYPHS[spec.glyphs[glyph]]
    if spec.noise > 0 and noise_rng is not None:
        image += noise_rng.uniform(-spec.noise, spec.noise, size=image.shape).astype(np.float32)
        np.clip(image, 0.0, 1.0, out=image)
    return image


class QuadrantCollector:
    """Generate class-balanced quadrant samples deterministically from a seed"""

    def __init__(self, spec: QuadrantSpec, verbose: bool = False):
        self.spec = spec
        self.verbose = verbose

    def collect(self, count: int, offset: int = 0) -> LabeledBatch:
        """
        Samples `offset .. offset+count-1` of the stream. Labels cycle
        round-robin through the M classes, so any multiple of M is balanced.
        """
        spec = self.spec
        if self.verbose:
            print(f"🧩 Generating {count} quadrant samples ({spec.num_classes} classes)...")
        rng = np.random.default_rng([spec.seed, offset])
        images = np.empty((count, spec.image_size, spec.image_size, 1), dtype=np.float32)
        labels = np.empty(count, dtype=np.int64)
        for index in range(count):
            label = (offset + index) % spec.num_classes
            jitter = tuple(int(v) for v in rng.integers(-spec.jitter, spec.jitter + 1, size=2))
            images[index, :, :, 0] = render_sample(spec, label // QUADRANTS, label % QUADRANTS, jitter, rng)
            labels[index] = label
        if self.verbose:
            print(f"✅ Generated {count} samples")
        return LabeledBatch(images=images, labels=labels)

    def collect_splits(self, train_count: int, eval_count: int) -> Tuple[LabeledBatch, LabeledBatch]:
        """Disjoint train/eval streams from the same seed"""
        return self.collect(train_count, offset=0), self.collect(eval_count, offset=train_count)


def gen_quadrant(spec: QuadrantSpec, count: int) -> LabeledBatch:
    return QuadrantCollector(spec).collect(count)


if __name__ == "__main__":
    batch = gen_quadrant(QuadrantSpec(), 80)
    print(f"images {batch.images.shape}, histogram {batch.class_histogram(8).tolist()}")
