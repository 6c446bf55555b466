"""Binomial estimates, Wilson intervals and reproducible random streams."""
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from scipy.stats import norm

from .constants import CONFIDENCE
from .errors import PreconditionError


def wilson_interval(k: int, n: int, confidence: float = CONFIDENCE) -> Tuple[float, float]:
    """Wilson score interval for ``k`` successes out of ``n``."""
    if n <= 0:
        raise PreconditionError("wilson interval needs n >= 1")
    z = norm.ppf(0.5 + confidence / 2)
    p = k / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for stream ``key`` below the root ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class OutageEstimate:
    """Monte Carlo estimate of a failure probability.

    ``volume`` scales the probability to a Lebesgue measure when the samples
    are drawn from a box that is not the unit cube.
    """

    samples: int
    failures: int
    seed: int
    volume: float = 1.0
    failed_indices: Tuple[int, ...] = ()
    params: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.failures <= self.samples:
            raise PreconditionError("failures must lie in [0, samples]")

    @property
    def estimate(self) -> float:
        return self.failures / self.samples

    @property
    def wilson95(self) -> Tuple[float, float]:
        return wilson_interval(self.failures, self.samples)

    @property
    def measure(self) -> float:
        return self.estimate * self.volume

    @property
    def sigma(self) -> float:
        return binomial_sigma(self.estimate, self.samples)

    def as_record(self):
        lo, hi = self.wilson95
        return {
            "samples": self.samples,
            "failures": self.failures,
            "estimate": self.estimate,
            "wilson_lo": lo,
            "wilson_hi": hi,
            "seed": self.seed,
            "volume": self.volume,
            "params": self.params,
        }
