"""Synthetic stripe dataset: horizontal-band images vs vertical-band
images, with additive uniform noise.  Desk-scale stand-in for a real
classification corpus; linearly separable at the pooled-feature level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SyntheticDataset:
    images: np.ndarray  # [n, 32, 32, 3] in roughly [-0.2, 1.2]
    labels: np.ndarray  # [n], 0 = horizontal stripes, 1 = vertical stripes
    seed: int


def make_stripes(n: int = 64, seed: int = 0, size: int = 32, period: int = 8,
                 noise: float = 0.2) -> SyntheticDataset:
    rng = np.random.default_rng(seed)
    images = np.empty((n, size, size, 3))
    labels = np.arange(n) % 2  # balanced by construction
    bands = (np.arange(size) // (period // 2)) % 2
    horizontal = np.broadcast_to(bands[:, None, None], (size, size, 3)).astype(float)
    vertical = np.broadcast_to(bands[None, :, None], (size, size, 3)).astype(float)
    for i in range(n):
        base = vertical if labels[i] else horizontal
        images[i] = base + rng.uniform(-noise, noise, base.shape)
    return SyntheticDataset(images=images, labels=labels, seed=seed)
