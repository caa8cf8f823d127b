"""Synthetic image corpus generation for experiments and tests.

Each class directory gets an even split of smooth gradient images (low
complexity) and dense noise images (high complexity), so routing budgets
and the stubs' complexity knee have two well-separated score clusters to
work with. Labels are independent of texture. Generation is fully
determined by the seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imgproc import GrayImage, save_pgm


def smooth_image(rng: np.random.Generator, size: int) -> GrayImage:
    lo = rng.uniform(10.0, 80.0)
    hi = rng.uniform(160.0, 240.0)
    ramp = np.linspace(lo, hi, size)
    field = np.tile(ramp, (size, 1))
    if rng.uniform() < 0.5:
        field = field.T
    return GrayImage(np.floor(field + 0.5).astype(np.uint8))


def noise_image(rng: np.random.Generator, size: int) -> GrayImage:
    return GrayImage(rng.integers(0, 256, (size, size), dtype=np.int64).astype(np.uint8))


def generate_synthetic_corpus(
    root,
    n_per_class: int,
    seed: int,
    size: int = 64,
) -> Path:
    """Write root/{good,defect} PGM files and return the root path."""
    base = Path(root)
    rng = np.random.default_rng(seed)
    for cls in ("good", "defect"):
        cls_dir = base / cls
        cls_dir.mkdir(parents=True, exist_ok=True)
        for i in range(n_per_class):
            img = smooth_image(rng, size) if i % 2 == 0 else noise_image(rng, size)
            save_pgm(img, cls_dir / f"img_{i:04d}.pgm")
    return base
