"""Seeded randomness for bit-reproducible experiments.

All randomness in the package flows through a counter-based 64-bit
generator (Philox) created from one explicit seed, and Gaussian samples
are produced by an explicit Box-Muller transform on top of it, so a run
is reproducible bit for bit from its seed alone.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator seeded from a single integer."""
    return np.random.Generator(np.random.Philox(seed))


def gaussian(rng: np.random.Generator, shape, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    """N(mean, std^2) samples via Box-Muller on uniform draws from `rng`."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    n = int(np.prod(shape)) if shape else 1
    half = (n + 1) // 2
    u1 = rng.random(half)
    u2 = rng.random(half)
    # 1 - u1 lies in (0, 1], so the log is finite.
    r = np.sqrt(-2.0 * np.log1p(-u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])[:n]
    return (mean + std * z).reshape(shape)
