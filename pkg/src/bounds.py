"""Sum-rate upper bounds of the X-channel and the exact LP over their region."""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .allocation import allocate, capacity_approx
from .channel import ChannelLevels, FineGains
from .constants import GAUSS_SLACK
from .stats import child_rng
from .workers import parallel_map

logger = logging.getLogger(__name__)

LABELS = ("a", "b", "c", "d", "e", "f", "g", "h", "i", "j")
# Coefficients over (R11, R12, R21, R22)
COEFFICIENTS = (
    (1, 1, 0, 1), (1, 0, 1, 1), (1, 1, 1, 0), (0, 1, 1, 1),
    (1, 1, 1, 1), (1, 1, 1, 1),
    (2, 1, 1, 1), (1, 2, 1, 1), (1, 1, 2, 1), (1, 1, 1, 2),
)

Number = Union[Fraction, float]


@dataclass(frozen=True)
class BoundSet:
    """Ten labelled linear constraints ``coef . (R11, R12, R21, R22) <= rhs``."""

    rhs: Tuple[Number, ...]
    exact: bool
    labels: Tuple[str, ...] = LABELS
    coefficients: Tuple[Tuple[int, int, int, int], ...] = COEFFICIENTS

    def value(self, label: str) -> Number:
        return self.rhs[self.labels.index(label)]

    def violated_by(self, rates: Sequence[Number], slack: float = 0.0) -> List[str]:
        """Labels of the constraints the rate tuple breaks."""
        out = []
        for label, coef, rhs in zip(self.labels, self.coefficients, self.rhs):
            if sum(c * r for c, r in zip(coef, rates)) > rhs + slack:
                out.append(label)
        return out

    def as_dict(self):
        return {label: (str(v) if self.exact else float(v)) for label, v in zip(self.labels, self.rhs)}


@dataclass(frozen=True)
class LpResult:
    optimum: Number
    vertex: Tuple[Number, Number, Number, Number]
    active: Tuple[str, ...]

    def as_dict(self):
        return {"optimum": str(self.optimum), "vertex": [str(v) for v in self.vertex],
                "active": list(self.active)}


def _pos(x):
    return x if x > 0 else 0


def det_bounds(levels: ChannelLevels) -> BoundSet:
    n11, n12, n21, n22 = levels.as_tuple()
    rhs = (
        max(n11, n12) + _pos(n22 - n12),
        max(n21, n22) + _pos(n11 - n21),
        max(n11, n12) + _pos(n21 - n11),
        max(n21, n22) + _pos(n12 - n22),
        max(n12, n11 - n21) + max(n21, n22 - n12),
        max(n11, n12 - n22) + max(n22, n21 - n11),
        max(n11, n12) + max(n21, n22 - n12) + _pos(n11 - n21),
        max(n11, n12) + max(n22, n21 - n11) + _pos(n12 - n22),
        max(n22, n21) + max(n11, n12 - n22) + _pos(n21 - n11),
        max(n22, n21) + max(n12, n11 - n21) + _pos(n22 - n12),
    )
    return BoundSet(tuple(Fraction(v) for v in rhs), exact=True)


def gauss_bounds(levels: ChannelLevels, h: FineGains) -> BoundSet:
    n11, n12, n21, n22 = levels.as_tuple()
    ld = np.longdouble

    def snr(n, g):
        return np.ldexp(ld(g) * ld(g), 2 * n)

    s11, s12, s21, s22 = snr(n11, h.h11), snr(n12, h.h12), snr(n21, h.h21), snr(n22, h.h22)

    def c(x):
        return 0.5 * np.log2(1 + x)

    rhs = (
        c(s11 + s12) + c(s22 / (1 + s12)),
        c(s22 + s21) + c(s11 / (1 + s21)),
        c(s11 + s12) + c(s21 / (1 + s11)),
        c(s22 + s21) + c(s12 / (1 + s22)),
        c(s12 + s11 / (1 + s21)) + c(s21 + s22 / (1 + s12)),
        c(s11 + s12 / (1 + s22)) + c(s22 + s21 / (1 + s11)),
        c(s11 + s12) + c(s21 + s22 / (1 + s12)) + c(s11 / (1 + s21)),
        c(s12 + s11) + c(s22 + s21 / (1 + s11)) + c(s12 / (1 + s22)),
        c(s21 + s22) + c(s11 + s12 / (1 + s22)) + c(s21 / (1 + s11)),
        c(s22 + s21) + c(s12 + s11 / (1 + s21)) + c(s22 / (1 + s12)),
    )
    return BoundSet(tuple(float(v) for v in rhs), exact=False)


def _combined(b: BoundSet):
    v = dict(zip(b.labels, b.rhs))
    half = Fraction(1, 2) if b.exact else 0.5
    third = Fraction(1, 3) if b.exact else 1 / 3
    return (
        (v["a"] + v["b"] + v["c"] + v["d"]) * third,
        v["e"],
        (v["d"] + v["g"]) * half,
        (v["c"] + v["j"]) * half,
    )


def combined_det_sum_bounds(levels: ChannelLevels) -> Tuple[Fraction, ...]:
    """The four sum-rate combinations of the deterministic bounds."""
    return _combined(det_bounds(levels))


def combined_gauss_sum_bounds(levels: ChannelLevels, h: FineGains) -> Tuple[float, ...]:
    return _combined(gauss_bounds(levels, h))


def _solve(rows: List[List[Fraction]], rhs: List[Fraction]) -> Optional[List[Fraction]]:
    """Gaussian elimination over the rationals, None for a singular matrix."""
    m = [list(row) + [b] for row, b in zip(rows, rhs)]
    size = len(m)
    for col in range(size):
        pivot = next((r for r in range(col, size) if m[r][col] != 0), None)
        if pivot is None:
            return None
        m[col], m[pivot] = m[pivot], m[col]
        for r in range(size):
            if r != col and m[r][col] != 0:
                factor = m[r][col] / m[col][col]
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return [m[r][size] / m[r][r] for r in range(size)]


@lru_cache(maxsize=1)
def _vertex_bases():
    """Integer adjugates of every nonsingular choice of four hyperplanes.

    Hyperplanes are the ten bounds followed by ``-R_k <= 0``. A vertex is
    ``adj @ b_subset / det`` with ``det > 0``.
    """
    planes = [list(c) for c in COEFFICIENTS] + [[-int(i == k) for i in range(4)] for k in range(4)]
    subsets, adjugates, dets = [], [], []
    for subset in itertools.combinations(range(len(planes)), 4):
        rows = [[Fraction(x) for x in planes[i]] for i in subset]
        columns = [_solve(rows, [Fraction(int(i == k)) for i in range(4)]) for k in range(4)]
        if columns[0] is None:
            continue
        det = _determinant(rows)
        inverse = np.array([[columns[k][i] for k in range(4)] for i in range(4)], dtype=object)
        adj = inverse * det
        if det < 0:
            adj, det = -adj, -det
        subsets.append(subset)
        adjugates.append([[int(x) for x in row] for row in adj])
        dets.append(int(det))
    return (np.array(planes, dtype=np.int64), np.array(subsets),
            np.array(adjugates, dtype=np.int64), np.array(dets, dtype=np.int64))


def _determinant(rows: List[List[Fraction]]) -> Fraction:
    m = [list(r) for r in rows]
    det = Fraction(1)
    for col in range(len(m)):
        pivot = next((r for r in range(col, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, len(m)):
            factor = m[r][col] / m[col][col]
            m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return det


def max_sum_rate(bounds: BoundSet) -> LpResult:
    """Largest R11 + R12 + R21 + R22 over the bound region, by vertex enumeration."""
    planes, subsets, adjugates, dets = _vertex_bases()
    if bounds.exact:
        if any(v.denominator != 1 for v in bounds.rhs):
            scale = np.lcm.reduce([v.denominator for v in bounds.rhs])
        else:
            scale = 1
        b = np.array([int(v * scale) for v in bounds.rhs] + [0, 0, 0, 0], dtype=np.int64)
        numerators = np.einsum("sij,sj->si", adjugates, b[subsets])
        feasible = np.all(numerators @ planes.T <= b[None, :] * dets[:, None], axis=1)
        candidates = np.flatnonzero(feasible)
        objective = numerators[candidates].sum(axis=1) / dets[candidates]
        best = candidates[np.argmax(objective)]
        vertex = tuple(Fraction(int(x), int(dets[best]) * int(scale)) for x in numerators[best])
        optimum = sum(vertex)
        rhs = list(bounds.rhs) + [Fraction(0)] * 4
        active = tuple(label for label, coef, r in zip(bounds.labels, COEFFICIENTS, rhs)
                       if sum(c * x for c, x in zip(coef, vertex)) == r)
        return LpResult(optimum, vertex, active)

    b = np.array(list(bounds.rhs) + [0.0] * 4)
    points = np.einsum("sij,sj->si", adjugates.astype(float), b[subsets]) / dets[:, None]
    feasible = np.all(points @ planes.T <= b[None, :] + GAUSS_SLACK, axis=1)
    candidates = np.flatnonzero(feasible)
    best = candidates[np.argmax(points[candidates].sum(axis=1))]
    vertex = tuple(float(x) for x in points[best])
    active = tuple(label for label, coef, r in zip(bounds.labels, COEFFICIENTS, bounds.rhs)
                   if abs(sum(c * x for c, x in zip(coef, vertex)) - r) <= GAUSS_SLACK)
    return LpResult(float(sum(vertex)), vertex, active)


@dataclass
class SandwichReport:
    levels: ChannelLevels
    d: Fraction
    lp_optimum: Fraction
    allocation_sum: int
    gauss_min: List[float] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)

    @property
    def lp_tight(self) -> bool:
        return self.lp_optimum == self.d

    def as_dict(self):
        return {
            "levels": self.levels.as_dict(), "D": str(self.d), "lp_optimum": str(self.lp_optimum),
            "lp_tight": self.lp_tight, "allocation_sum": self.allocation_sum,
            "gauss_min": self.gauss_min, "violations": self.violations,
        }


def sandwich_check(levels: ChannelLevels, gauss_samples: int = 0, seed: int = 0) -> SandwichReport:
    """Check that the achievable sum rate, D(N) and the upper bounds are ordered."""
    levels.require_strong_direct()
    d = capacity_approx(levels).d
    bounds = det_bounds(levels)
    lp = max_sum_rate(bounds)
    allocation = allocate(levels)
    report = SandwichReport(levels, d, lp.optimum, allocation.sum_rate())

    if lp.optimum > d:
        report.violations.append(f"LP optimum {lp.optimum} exceeds D = {d}")
    if allocation.sum_rate() < d - 4 or allocation.sum_rate() > d:
        report.violations.append(f"allocation sum {allocation.sum_rate()} outside [D - 4, D] with D = {d}")
    broken = bounds.violated_by(allocation.message_rates())
    if broken:
        report.violations.append(f"ideal allocation breaks bounds {','.join(broken)}")
    if lp.optimum < allocation.sum_rate():
        report.violations.append(f"LP optimum {lp.optimum} below achieved {allocation.sum_rate()}")

    for index in range(gauss_samples):
        h = FineGains.sample(child_rng(seed, index))
        best = min(combined_gauss_sum_bounds(levels, h))
        report.gauss_min.append(best)
        if best > float(d) + 4 + GAUSS_SLACK:
            report.violations.append(f"gaussian bound {best:.6f} exceeds D + 4 at h = {h.as_tuple()}")
    return report


def _sweep_row(task) -> List[str]:
    n11, max_level = task
    problems = []
    for n22 in range(max_level + 1):
        top = min(n11, n22)
        for n12, n21 in itertools.product(range(top + 1), repeat=2):
            report = sandwich_check(ChannelLevels(n11, n12, n21, n22))
            problems.extend(f"{report.levels.as_tuple()}: {v}" for v in report.violations)
    return problems


def sandwich_sweep(max_level: int) -> List[str]:
    """All sandwich violations on the strong-direct grid up to ``max_level``."""
    rows = parallel_map(_sweep_row, [(n11, max_level) for n11 in range(max_level + 1)])
    problems = [p for row in rows for p in row]
    logger.info("sandwich sweep up to %d: %d violations", max_level, len(problems))
    return problems
