from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class SplitSpec:
    r_a: float = 1.0
    r_b: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("r_a", "r_b"):
            r = getattr(self, name)
            if not 0.0 < r <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1], got {r}")


def train_count(n, ratio):
    """round(ratio * n), halves rounding up."""
    return min(n, int(math.floor(ratio * n + 0.5)))


def split_dataset(samples, ratio, seed):
    """Seeded shuffle; the first round(ratio * n) items train, the rest validate."""
    samples = list(samples)
    if not samples:
        raise ConfigError("cannot split an empty dataset")
    if not 0.0 < ratio <= 1.0:
        raise ConfigError(f"split ratio must lie in (0, 1], got {ratio}")
    order = np.random.default_rng(seed).permutation(len(samples))
    k = train_count(len(samples), ratio)
    return [samples[i] for i in order[:k]], [samples[i] for i in order[k:]]


def split_domains(samples_a, samples_b, spec):
    """Split both styles with independent streams derived from ``spec.seed``."""
    return (
        split_dataset(samples_a, spec.r_a, [spec.seed, 0]),
        split_dataset(samples_b, spec.r_b, [spec.seed, 1]),
    )
