"""Case I-V bit allocations, the capacity approximation and the decoding conditions."""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .channel import ChannelLevels
from .constants import (
    C1, C2, DET_PENALTY_BASE, GAUSS_OFFSET, GAUSS_PENALTY_BASE, GUARD_BITS, PENALTY_SEARCH_CHUNK,
)
from .errors import InfeasibleAllocationError, PreconditionError

logger = logging.getLogger(__name__)

RATE_NAMES = ("r11c", "r11p", "r12", "r21", "r22c", "r22p")
_RANK_BASE = 1 << 16  # Packs (sum, private, cross) into one sortable key


class Case(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"


class Model(str, Enum):
    DET = "det"
    GAUSS = "gauss"


@dataclass(frozen=True)
class OutageTarget:
    """Allowed outage measure delta in (0, 1]."""

    delta: float

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise PreconditionError(f"delta must lie in (0, 1], got {self.delta}")


@dataclass(frozen=True)
class RateAllocation:
    """Bits per channel use carried by each message portion."""

    r11c: int = 0
    r11p: int = 0
    r12: int = 0
    r21: int = 0
    r22c: int = 0
    r22p: int = 0
    case_tag: Union[Case, None] = None

    def __post_init__(self):
        for name in RATE_NAMES:
            if getattr(self, name) < 0:
                raise PreconditionError(f"{name} must be nonnegative")

    def sum_rate(self) -> int:
        return sum(self.rates().values())

    def rates(self) -> Dict[str, int]:
        return {name: getattr(self, name) for name in RATE_NAMES}

    def message_rates(self) -> Tuple[int, int, int, int]:
        """Rates ``(R11, R12, R21, R22)`` of the four messages."""
        return (self.r11c + self.r11p, self.r12, self.r21, self.r22c + self.r22p)

    def relabeled(self) -> "RateAllocation":
        """Allocation seen after swapping both user labels."""
        return RateAllocation(
            r11c=self.r22c, r11p=self.r22p, r12=self.r21, r21=self.r12,
            r22c=self.r11c, r22p=self.r11p, case_tag=self.case_tag,
        )

    def as_dict(self):
        out = dict(self.rates())
        out["case"] = self.case_tag.value if self.case_tag else None
        out["sum_rate"] = self.sum_rate()
        return out


@dataclass(frozen=True)
class CapacityApprox:
    """Sum-capacity approximation ``D = min(D1..D4) + offset``."""

    d1: Fraction
    d2: Fraction
    d3: Fraction
    d4: Fraction
    offset: int
    c1: int = C1
    c2: int = C2

    @property
    def d(self) -> Fraction:
        return min(self.d1, self.d2, self.d3, self.d4) + self.offset

    def as_dict(self):
        return {
            "D": str(self.d), "D1": str(self.d1), "D2": str(self.d2),
            "D3": str(self.d3), "D4": str(self.d4), "offset": self.offset,
            "c1": self.c1, "c2": self.c2,
        }


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a decoding-condition check."""

    passed: bool
    violated: Tuple[str, ...]
    slack: Dict[str, float] = field(default_factory=dict)

    @property
    def violation(self) -> float:
        """Total amount by which the violated inequalities are exceeded."""
        return sum(-self.slack[label] for label in self.violated)

    def as_dict(self):
        return {"passed": self.passed, "violated": list(self.violated),
                "slack": {k: float(v) for k, v in sorted(self.slack.items())}}


def _pos(x):
    return x if x > 0 else 0


def _oriented(levels: ChannelLevels) -> Tuple[ChannelLevels, bool]:
    levels.require_strong_direct()
    if levels.n11 > levels.n22:
        return levels.relabeled(), True
    return levels, False


def classify_case(levels: ChannelLevels) -> Case:
    """Regime of ``n12 + n21`` relative to the direct-link exponents."""
    n, _ = _oriented(levels)
    s2 = 2 * (n.n12 + n.n21)
    if s2 <= 2 * n.n11:
        return Case.I
    if s2 <= 2 * n.n22:
        return Case.II
    if s2 <= 2 * n.n11 + n.n22:
        return Case.III
    if s2 <= 3 * n.n22:
        return Case.IV
    return Case.V


def _allocate_oriented(n: ChannelLevels, case: Case) -> RateAllocation:
    n11, n12, n21, n22 = n.as_tuple()
    r11p = n11 - n21
    r22p = n22 - n12
    if case is Case.I:
        return RateAllocation(r11p=r11p, r22p=r22p, case_tag=case)
    if case is Case.II:
        return RateAllocation(r11p=r11p, r22p=r22p, r22c=n12 - r11p, case_tag=case)
    if case is Case.III:
        r12 = _pos(n12 + 2 * n21 - n11 - n22)
        r21 = _pos(n21 + 2 * n12 - n11 - n22)
        return RateAllocation(
            r11c=n21 - r22p - r21, r11p=r11p, r12=r12, r21=r21,
            r22c=n12 - r11p - r12, r22p=r22p, case_tag=case,
        )
    if case is Case.IV:
        half = Fraction(n22, 2)
        r12 = math.floor(n21 - half)
        return RateAllocation(
            r11c=r12, r11p=r11p, r12=r12, r21=math.floor(n12 - half),
            r22c=n22 - n21, r22p=r22p, case_tag=case,
        )
    r12 = (2 * n21 - n12) // 3
    r21 = (2 * n12 - n21) // 3
    return RateAllocation(r11c=r12, r11p=r11p, r12=r12, r21=r21, r22c=r21, r22p=r22p, case_tag=case)


def allocate(levels: ChannelLevels) -> RateAllocation:
    """Ideal allocation for the case of ``levels``, without outage penalty."""
    n, swapped = _oriented(levels)
    allocation = _allocate_oriented(n, classify_case(n))
    return allocation.relabeled() if swapped else allocation


def capacity_approx(levels: ChannelLevels) -> CapacityApprox:
    levels.require_strong_direct()
    n11, n12, n21, n22 = levels.as_tuple()
    s = n12 + n21
    return CapacityApprox(
        d1=Fraction(_pos(s - n11) + _pos(s - n22)),
        d2=Fraction(s + _pos(s - n22), 2),
        d3=Fraction(s + _pos(s - n11), 2),
        d4=Fraction(2 * s, 3),
        offset=levels.offset,
    )


def _penalties(model: Model, delta: float, ideal: bool) -> Tuple[float, float]:
    """Amounts taken off the (a)/(b) and the (c) decoding bounds."""
    if model is Model.DET:
        log_base, constant = DET_PENALTY_BASE, 0
    else:
        log_base, constant = GAUSS_PENALTY_BASE, GAUSS_OFFSET
    if ideal:
        return constant, constant
    OutageTarget(delta)
    return constant + math.log2(log_base / delta), constant


def _check(lines, ab_penalty: float, c_penalty: float) -> ConditionReport:
    slack: Dict[str, float] = {}
    violated: List[str] = []
    for label, lhs, rhs, kind, skip in lines:
        if skip:
            continue
        bound = rhs - (ab_penalty if kind == "ab" else c_penalty)
        slack[label] = bound - lhs
        if lhs > bound:
            violated.append(label)
    return ConditionReport(not violated, tuple(violated), slack)


def _condition_lines(a: RateAllocation, levels: ChannelLevels, suffix: str):
    n11, n12, n21, n22 = levels.as_tuple()
    interference1 = max(a.r21, a.r22c)
    interference2 = max(a.r12, a.r11c)
    return [
        ("decoding1a" + suffix, a.r11c + interference1 + a.r12 + a.r11p, n11, "ab", False),
        ("decoding1b" + suffix, interference1 + a.r12 + a.r11p, n12, "ab", interference1 == 0),
        ("decoding1c" + suffix, a.r12 + a.r11p, n12 + n21 - n22, "c", a.r12 == 0),
        ("decoding2a" + suffix, a.r22c + interference2 + a.r21 + a.r22p, n22, "ab", False),
        ("decoding2b" + suffix, interference2 + a.r21 + a.r22p, n21, "ab", interference2 == 0),
        ("decoding2c" + suffix, a.r21 + a.r22p, n12 + n21 - n11, "c", a.r21 == 0),
    ]


def check_det_conditions(a: RateAllocation, levels: ChannelLevels, delta: float = 1.0,
                         ideal: bool = False) -> ConditionReport:
    """Deterministic decoding conditions; ``ideal`` drops the log(32/delta) loss."""
    return _check(_condition_lines(a, levels, ""), *_penalties(Model.DET, delta, ideal))


def check_gauss_conditions(a: RateAllocation, levels: ChannelLevels, delta: float = 1.0,
                           ideal: bool = False) -> ConditionReport:
    """Gaussian decoding conditions; ``ideal`` drops the log(13104/delta) term only."""
    return _check(_condition_lines(a, levels, "gauss"), *_penalties(Model.GAUSS, delta, ideal))


def guard_limits(levels: ChannelLevels) -> Dict[str, int]:
    """Largest rate per portion whose window still fits behind the guard bits."""
    n11, n12, n21, n22 = levels.as_tuple()
    return {
        "r11c": min(n21, _pos(n11 - GUARD_BITS)),
        "r11p": _pos(n11 - n21 - GUARD_BITS),
        "r12": _pos(n21 - GUARD_BITS),
        "r21": _pos(n12 - GUARD_BITS),
        "r22c": min(n12, _pos(n22 - GUARD_BITS)),
        "r22p": _pos(n22 - n12 - GUARD_BITS),
    }


def penalty_cap(delta: float, model: Model = Model.DET) -> int:
    """Most bits the penalized allocation should lose: twice the (a)/(b) penalty, rounded up."""
    ab_penalty, _ = _penalties(Model(model), delta, ideal=False)
    return math.ceil(2 * ab_penalty)


def _integer_bounds(levels: ChannelLevels, ab_penalty: float, c_penalty: float) -> Tuple[int, ...]:
    # Rates are integers, so lhs <= rhs - penalty is lhs <= floor(rhs - penalty)
    n11, n12, n21, n22 = levels.as_tuple()
    return (
        math.floor(n11 - ab_penalty), math.floor(n12 - ab_penalty), math.floor(n12 + n21 - n22 - c_penalty),
        math.floor(n22 - ab_penalty), math.floor(n21 - ab_penalty), math.floor(n12 + n21 - n11 - c_penalty),
    )


def _search_reduction(start: RateAllocation, bounds: Tuple[int, ...]) -> Optional[RateAllocation]:
    """Largest allocation below ``start`` rate by rate that meets ``bounds``.

    Common and cross rates are enumerated; each private rate is then the
    largest value its three conditions allow. Among equal sums the most
    private bits win, then the most cross bits.
    """
    a1, b1, c1, a2, b2, c2 = bounds
    r12 = np.arange(start.r12 + 1).reshape(1, -1, 1, 1)
    r21 = np.arange(start.r21 + 1).reshape(1, 1, -1, 1)
    r22c = np.arange(start.r22c + 1).reshape(1, 1, 1, -1)
    box = (start.r11c + 1) * r12.size * r21.size * r22c.size
    sections = -(-box // PENALTY_SEARCH_CHUNK)

    best_key, best = -1, None
    for chunk in np.array_split(np.arange(start.r11c + 1), sections):
        if not chunk.size:
            continue
        r11c = chunk.reshape(-1, 1, 1, 1)
        interference1 = np.maximum(r21, r22c)
        interference2 = np.maximum(r12, r11c)

        top11 = np.minimum(start.r11p, a1 - r11c - interference1 - r12)
        top11 = np.where(interference1 > 0, np.minimum(top11, b1 - interference1 - r12), top11)
        top11 = np.where(r12 > 0, np.minimum(top11, c1 - r12), top11)
        top22 = np.minimum(start.r22p, a2 - r22c - interference2 - r21)
        top22 = np.where(interference2 > 0, np.minimum(top22, b2 - interference2 - r21), top22)
        top22 = np.where(r21 > 0, np.minimum(top22, c2 - r21), top22)

        cross = r12 + r21
        private = top11 + top22
        total = r11c + r22c + cross + private
        feasible = (top11 >= 0) & (top22 >= 0)
        key = np.where(feasible, (total * _RANK_BASE + private) * _RANK_BASE + cross, -1)

        flat = int(np.argmax(key))
        if key.flat[flat] <= best_key:
            continue
        best_key = int(key.flat[flat])
        idx = np.unravel_index(flat, key.shape)
        best = RateAllocation(
            r11c=int(chunk[idx[0]]),
            r11p=int(np.broadcast_to(top11, key.shape)[idx]),
            r12=int(idx[1]),
            r21=int(idx[2]),
            r22c=int(idx[3]),
            r22p=int(np.broadcast_to(top22, key.shape)[idx]),
            case_tag=start.case_tag,
        )
    return best


def allocate_penalized(levels: ChannelLevels, delta: float, model: Model = Model.DET) -> RateAllocation:
    """Largest allocation below the ideal one that meets the penalized decoding conditions.

    The Gaussian model first clips every rate to its guard limit. The loss
    is measured from that starting point and logged as a warning when it
    exceeds ``penalty_cap``.
    """
    target = OutageTarget(delta.delta if isinstance(delta, OutageTarget) else delta)
    model = Model(model)
    start = allocate(levels)
    if model is Model.GAUSS:
        limits = guard_limits(levels)
        start = replace(start, **{k: min(v, limits[k]) for k, v in start.rates().items()})

    ab_penalty, c_penalty = _penalties(model, target.delta, ideal=False)
    allocation = _search_reduction(start, _integer_bounds(levels, ab_penalty, c_penalty))
    if allocation is None:
        raise InfeasibleAllocationError(
            f"{levels} cannot absorb a {ab_penalty:.3f}-bit penalty at delta={target.delta}")

    loss = start.sum_rate() - allocation.sum_rate()
    cap = penalty_cap(target.delta, model)
    if loss > cap:
        logger.warning("penalized %s allocation for %s removes %d bits, over the cap of %d",
                       model.value, levels.as_tuple(), loss, cap)
    else:
        logger.debug("penalized %s allocation for %s removes %d bits", model.value, levels.as_tuple(), loss)
    return allocation
