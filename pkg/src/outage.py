"""Outage-set measurements: Monte Carlo measures, the Groshev-type bound and the MAC map."""
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .allocation import RateAllocation
from .channel import ChannelLevels, DetChannelGains, FineGains, effective_gains
from .constants import (ENUMERATION_BUDGET, GROSHEV_BUDGET, MAC_Q1_LEVELS, MAC_Q2_LEVELS, MAC_THRESHOLD,
                        MAX_RECORDED_FAILURES, MIN_DISTANCE_TARGET, SIM_CHUNK)
from .errors import BudgetExceededError, PreconditionError
from .gf2 import BitVec, rank, toeplitz_from_gain
from .links.det_link import decodable
from .links.gauss_link import build_constellation, min_distance
from .stats import OutageEstimate, child_rng
from .workers import parallel_map

logger = logging.getLogger(__name__)

GROSHEV_VOLUME = 27.0  # (1, 4]^3


def _estimate(failed: List[int], samples: int, seed: int, params: dict, volume: float = 1.0) -> OutageEstimate:
    return OutageEstimate(
        samples=samples,
        failures=len(failed),
        seed=seed,
        volume=volume,
        failed_indices=tuple(failed[:MAX_RECORDED_FAILURES]),
        params=params,
    )


def replay_det_sample(levels: ChannelLevels, a: RateAllocation, seed: int, index: int) -> bool:
    """True when deterministic sample ``index`` under ``seed`` is an outage."""
    return not decodable(DetChannelGains.sample(child_rng(seed, index)), a, levels)


def _det_block(task) -> List[int]:
    levels, a, seed, start, stop = task
    return [i for i in range(start, stop) if replay_det_sample(levels, a, seed, i)]


def _blocks(samples: int) -> List[Tuple[int, int]]:
    return [(start, min(start + SIM_CHUNK, samples)) for start in range(0, samples, SIM_CHUNK)]


def mc_outage_det(levels: ChannelLevels, a: RateAllocation, samples: int, seed: int) -> OutageEstimate:
    """Fraction of gains in (1, 2]^(2x3) at which either receiver cannot decode."""
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    levels.require_strong_direct()
    tasks = [(levels, a, seed, start, stop) for start, stop in _blocks(samples)]
    failed = [i for block in parallel_map(_det_block, tasks) for i in block]
    logger.info("deterministic outage %s: %d / %d", levels.as_tuple(), len(failed), samples)
    return _estimate(failed, samples, seed, {"model": "det", "levels": levels.as_dict(),
                                             "allocation": a.as_dict()})


def replay_gauss_sample(levels: ChannelLevels, a: RateAllocation, seed: int, index: int,
                        threshold: float = MIN_DISTANCE_TARGET, budget: int = ENUMERATION_BUDGET) -> bool:
    """True when Gaussian sample ``index`` has minimum distance below ``threshold``."""
    c = build_constellation(a, levels)
    return _gauss_fails(FineGains.sample(child_rng(seed, index)), c, threshold, budget)


def _gauss_fails(h: FineGains, c, threshold: float, budget: int) -> bool:
    g = effective_gains(h)
    return any(min_distance(g.receiver(rx), c, rx, budget).d < threshold for rx in (1, 2))


def _gauss_block(task) -> List[int]:
    levels, a, seed, start, stop, threshold, budget = task
    c = build_constellation(a, levels)
    return [i for i in range(start, stop)
            if _gauss_fails(FineGains.sample(child_rng(seed, i)), c, threshold, budget)]


def mc_outage_gauss(levels: ChannelLevels, a: RateAllocation, samples: int, seed: int,
                    threshold: float = MIN_DISTANCE_TARGET, budget: int = ENUMERATION_BUDGET) -> OutageEstimate:
    """Fraction of fine gains in (1, 2]^4 with minimum distance below ``threshold``."""
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    build_constellation(a, levels)
    tasks = [(levels, a, seed, start, stop, threshold, budget) for start, stop in _blocks(samples)]
    failed = [i for block in parallel_map(_gauss_block, tasks) for i in block]
    logger.info("gaussian outage %s: %d / %d", levels.as_tuple(), len(failed), samples)
    return _estimate(failed, samples, seed, {"model": "gauss", "levels": levels.as_dict(),
                                             "allocation": a.as_dict(), "threshold": threshold})


@dataclass(frozen=True)
class GroshevParams:
    """Scale ``beta``, integer weights ``a1, a2`` and box half-widths ``q0, q1, q2``."""

    beta: float
    a1: int
    a2: int
    q0: int
    q1: int
    q2: int

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise PreconditionError(f"beta must lie in (0, 1], got {self.beta}")
        for name in ("a1", "a2", "q0", "q1", "q2"):
            if getattr(self, name) < 1:
                raise PreconditionError(f"{name} must be a positive integer")

    @property
    def q1_tilde(self) -> Fraction:
        return min(Fraction(self.q1), Fraction(8 * max(self.q0, self.a2 * self.q2), self.a1))

    @property
    def q2_tilde(self) -> Fraction:
        return min(Fraction(self.q2), Fraction(8 * max(self.q0, self.a1 * self.q1), self.a2))

    @property
    def box_size(self) -> int:
        return (2 * self.q0 + 1) * (2 * self.q1 + 1) * (2 * self.q2 + 1)

    def as_dict(self):
        return {"beta": self.beta, "a1": self.a1, "a2": self.a2, "q0": self.q0, "q1": self.q1, "q2": self.q2}


def groshev_bound(p: GroshevParams) -> float:
    """Upper bound on the measure of gains with a short small integer relation."""
    q0, q1, q2 = Fraction(p.q0), Fraction(p.q1), Fraction(p.q2)
    t1, t2 = p.q1_tilde, p.q2_tilde
    total = (
        2 * min(q2, q0 / p.a2)
        + min(q1 * t2, q0 * t2 / p.a1, p.a2 * t2 * t2 / p.a1)
        + 2 * min(q1, q0 / p.a1)
        + min(q2 * t1, q0 * t1 / p.a2, p.a1 * t1 * t1 / p.a2)
    )
    return float(504 * Fraction(p.beta) * total)


def _groshev_block(task) -> List[int]:
    p, seed, index, start, stop, only_q0 = task
    rng = child_rng(seed, index)
    g = 4.0 - 3.0 * rng.random((stop - start, 3))
    g0 = g[:, :1]
    if only_q0:
        grid = np.zeros((1, 2))
    else:
        q1, q2 = np.meshgrid(np.arange(-p.q1, p.q1 + 1), np.arange(-p.q2, p.q2 + 1), indexing="ij")
        grid = np.stack([q1.ravel(), q2.ravel()], axis=1).astype(float)
    partial = p.a1 * g[:, 1:2] * grid[None, :, 0] + p.a2 * g[:, 2:3] * grid[None, :, 1]
    q0 = np.clip(np.rint(-partial / g0), -p.q0, p.q0)
    origin = (grid[:, 0] == 0) & (grid[:, 1] == 0)
    # q0 = 0 is excluded when q1 = q2 = 0
    q0[:, origin] = np.where(q0[:, origin] == 0, 1, q0[:, origin])
    hit = np.abs(g0 * q0 + partial) < p.beta
    return [start + int(i) for i in np.flatnonzero(hit.any(axis=1))]


def mc_groshev_measure(p: GroshevParams, samples: int, seed: int, budget: int = GROSHEV_BUDGET,
                       only_q0: bool = False) -> OutageEstimate:
    """Measure of gains in (1, 4]^3 admitting a nonzero integer relation smaller than beta.

    ``only_q0`` restricts the relation to the ``q0`` axis.
    """
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    if p.box_size > budget:
        raise BudgetExceededError(p.box_size, budget, "integer box")
    tasks = [(p, seed, index, start, stop, only_q0) for index, (start, stop) in enumerate(_blocks(samples))]
    failed = [i for block in parallel_map(_groshev_block, tasks) for i in block]
    return _estimate(failed, samples, seed, {"groshev": p.as_dict(), "only_q0": only_q0},
                     volume=GROSHEV_VOLUME)


def _mac_differences(q1_levels: int, q2_levels: int) -> np.ndarray:
    u1 = np.arange(q1_levels) / q1_levels
    u2 = np.arange(q2_levels) / q2_levels
    d1 = np.unique(u1[:, None] - u1[None, :])
    d2 = np.unique(u2[:, None] - u2[None, :])
    pairs = np.array([(a, b) for a in d1 for b in d2 if a != 0 or b != 0])
    return pairs


def mac_axis(grid: int) -> np.ndarray:
    """Grid coordinates ``1 + (i + 1) / grid`` covering (1, 2]."""
    if grid < 2:
        raise PreconditionError("grid must be >= 2")
    return 1.0 + np.arange(1, grid + 1) / grid


def mac_outage_map(n: int, grid: int, q1_levels: int = MAC_Q1_LEVELS, q2_levels: int = MAC_Q2_LEVELS) -> np.ndarray:
    """1 where two distinct MAC inputs come within distance 2 at scale 2^n, else 0.

    Rows index h1, columns h2.
    """
    if n < 0:
        raise PreconditionError("n must be >= 0")
    axis = mac_axis(grid)
    h1, h2 = axis[:, None], axis[None, :]
    closest = np.full((grid, grid), np.inf)
    for a, b in _mac_differences(q1_levels, q2_levels):
        np.minimum(closest, np.abs(h1 * a + h2 * b), out=closest)
    return (np.ldexp(closest, n) <= MAC_THRESHOLD).astype(np.uint8)


def mac_pair_check(h1: float, h2: float, n: int, q1_levels: int = MAC_Q1_LEVELS,
                   q2_levels: int = MAC_Q2_LEVELS) -> Tuple[bool, Optional[tuple], float]:
    """Brute force over all input pairs: (outage, violating pair, smallest scaled distance)."""
    inputs = [(i / q1_levels, j / q2_levels) for i in range(q1_levels) for j in range(q2_levels)]
    best, witness = np.inf, None
    for (u1, u2), (v1, v2) in itertools.combinations(inputs, 2):
        dist = 2.0 ** n * abs(h1 * (u1 - v1) + h2 * (u2 - v2))
        if dist < best:
            best = dist
            if dist <= MAC_THRESHOLD:
                witness = ((u1, u2), (v1, v2))
    return best <= MAC_THRESHOLD, witness, best


def mac_black_fraction(outage: np.ndarray) -> float:
    return float(outage.mean())


def mac_strip_count(n: int, q1_levels: int = MAC_Q1_LEVELS, q2_levels: int = MAC_Q2_LEVELS) -> int:
    """Number of outage strips ``|h1 a + h2 b| <= 2^(1-n)`` that meet [1, 2]^2, up to sign."""
    width = 2.0 ** (1 - n)
    count = 0
    for a, b in _mac_differences(q1_levels, q2_levels):
        if (a, b) < (0, 0):
            continue
        corners = [a * x + b * y for x in (1.0, 2.0) for y in (1.0, 2.0)]
        low, high = min(corners), max(corners)
        nearest = 0.0 if low <= 0 <= high else min(abs(low), abs(high))
        if nearest <= width:
            count += 1
    return count


def mac_det_comparison(h1: float, h2: float, n: int = 4, r1: int = 3, r2: int = 1) -> Dict[str, bool]:
    """Decodability of a two-user MAC under the signal-strength and lower-triangular models.

    User 1 sends ``r1`` bits on its top levels and user 2 sends ``r2`` bits on
    its top levels; both arrive at the same strength 2^n.
    """
    if r1 + r2 > n:
        raise PreconditionError("more bits than receiver levels")
    shift_model = [BitVec.unit(n, level) for level in range(1, r1 + 1)]
    shift_model += [BitVec.unit(n, level) for level in range(1, r2 + 1)]
    g1, g2 = toeplitz_from_gain(h1, n), toeplitz_from_gain(h2, n)
    triangular = [g1.column(level) for level in range(1, r1 + 1)]
    triangular += [g2.column(level) for level in range(1, r2 + 1)]
    return {
        "signal_strength": rank(shift_model) == r1 + r2,
        "lower_triangular": rank(triangular) == r1 + r2,
    }
