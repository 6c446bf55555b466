"""Gaussian modulation chain: constellations, minimum distance and demodulation.

Every message portion is placed in the binary expansion of its modulation
symbol exactly as in the deterministic link, pushed down by two zero guard
levels. At receiver m the noiseless signal is

    v_m = g_m1 * s_m1 + g_m2 * s_m2 + g_m0 * s_m0

where s_m0 is the aligned sum of both interfering portions. Constellation
values are dyadic, so they are held in ``np.longdouble`` and compared exactly.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.stats import norm

from ..allocation import RateAllocation
from ..channel import ChannelLevels, FineGains, effective_gains, gauss_channel_apply, modulate_inputs, quantize_gains
from ..constants import (DESK_RATE_BITS, ENUMERATION_BUDGET, GUARD_BITS, MAX_RECORDED_FAILURES,
                         MIN_DISTANCE_TARGET, SIM_CHUNK)
from ..errors import BudgetExceededError, PreconditionError
from ..stats import OutageEstimate, child_rng
from ..workers import parallel_map
from .base_link import BaseLink
from .det_link import SlotWindow, slot_layout

logger = logging.getLogger(__name__)

LD = np.longdouble
UNION_BOUND_POINTS = 4096

Symbol = Union[np.longdouble, np.ndarray]


def _slot_values(window: SlotWindow) -> np.ndarray:
    """All values of ``sum_i b_i 2^-i`` over the levels of ``window``."""
    if window.width == 0:
        return np.zeros(1, dtype=LD)
    return np.ldexp(np.arange(1 << window.width, dtype=LD), -window.end)


def _sumset(a: np.ndarray, pa: np.ndarray, b: np.ndarray, pb: np.ndarray):
    values, inverse = np.unique((a[:, None] + b[None, :]).ravel(), return_inverse=True)
    probs = np.zeros(len(values))
    np.add.at(probs, inverse.ravel(), (pa[:, None] * pb[None, :]).ravel())
    return values, probs


def _uniform(values: np.ndarray) -> np.ndarray:
    return np.full(len(values), 1.0 / len(values))


def _differences(values: np.ndarray) -> np.ndarray:
    return np.unique((values[:, None] - values[None, :]).ravel())


def enumeration_size(a: RateAllocation) -> int:
    """Number of joint symbol choices, 2 ** sum_rate."""
    return 1 << a.sum_rate()


def exceeds_desk_budget(a: RateAllocation) -> bool:
    return a.sum_rate() > DESK_RATE_BITS


@dataclass(frozen=True)
class ReceiverSymbols:
    """Symbol triple seen at one receiver, scalars for one output or arrays for many."""

    s1: Symbol
    s2: Symbol
    s0: Symbol


@dataclass(frozen=True)
class MinDistanceReport:
    d: float
    argmin: Tuple[float, float, float]
    sizes: Tuple[int, int, int]

    def as_dict(self):
        return {"d": self.d if math.isfinite(self.d) else None,
                "argmin": [float(x) for x in self.argmin], "sizes": list(self.sizes)}


@dataclass(frozen=True)
class MismatchReport:
    d: float
    d_prime: float
    d_hat: float

    def as_dict(self):
        return {"d": self.d, "d_prime": self.d_prime, "d_hat": self.d_hat}


@dataclass(frozen=True)
class ModConstellation:
    """Guarded bit windows of every message portion and the receiver symbol sets."""

    levels: ChannelLevels
    allocation: RateAllocation
    windows: Tuple[Tuple[str, SlotWindow], ...]
    _sets: Dict[int, tuple] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_sets", {1: self._build(1), 2: self._build(2)})

    def window(self, name: str) -> SlotWindow:
        return dict(self.windows)[name]

    def slot_values(self, name: str) -> np.ndarray:
        return _slot_values(self.window(name))

    def _stream(self, *names: str):
        values, probs = self.slot_values(names[0]), _uniform(self.slot_values(names[0]))
        for name in names[1:]:
            other = self.slot_values(name)
            values, probs = _sumset(values, probs, other, _uniform(other))
        return values, probs

    def _build(self, rx: int):
        n11, n12, n21, n22 = self.levels.as_tuple()
        if rx == 1:
            s1, p1 = self._stream("r11c", "r11p")
            s2, p2 = self._stream("r12")
            a, pa = self._stream("r21")
            b, pb = self._stream("r22c")
            s0, p0 = _sumset(np.ldexp(a, n11), pa, np.ldexp(b, n12), pb)
            return (np.ldexp(s1, n11), np.ldexp(s2, n12), s0), (p1, p2, p0)
        s1, p1 = self._stream("r21")
        s2, p2 = self._stream("r22c", "r22p")
        a, pa = self._stream("r12")
        b, pb = self._stream("r11c")
        s0, p0 = _sumset(np.ldexp(a, n22), pa, np.ldexp(b, n21), pb)
        return (np.ldexp(s1, n21), np.ldexp(s2, n22), s0), (p1, p2, p0)

    def receiver_sets(self, rx: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sorted distinct values of ``(s_m1, s_m2, s_m0)``."""
        if rx not in (1, 2):
            raise PreconditionError(f"receiver must be 1 or 2, got {rx}")
        return self._sets[rx][0]

    def receiver_weights(self, rx: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Probability of each receiver symbol under uniform messages."""
        return self._sets[rx][1]

    def receiver_size(self, rx: int) -> int:
        return int(np.prod([len(s) for s in self.receiver_sets(rx)]))

    @property
    def size(self) -> int:
        return enumeration_size(self.allocation)


def build_constellation(a: RateAllocation, levels: ChannelLevels) -> ModConstellation:
    levels.require_strong_direct()
    layout = slot_layout(a, levels, guard=GUARD_BITS)
    c = ModConstellation(levels, a, tuple(sorted(layout.items())))
    if exceeds_desk_budget(a):
        logger.warning("constellation of %d bits exceeds the %d-bit desk budget", a.sum_rate(), DESK_RATE_BITS)
    return c


def min_distance(gains: Tuple[float, float, float], c: ModConstellation, rx: int,
                 budget: int = ENUMERATION_BUDGET) -> MinDistanceReport:
    """Exact minimum of ``|g1 ds1 + g2 ds2 + g0 ds0|`` over nonzero difference triples."""
    g0, g1, g2 = (LD(g) for g in gains)
    s1, s2, s0 = c.receiver_sets(rx)
    sizes = (len(s1), len(s2), len(s0))
    d1, d2, d0 = _differences(s1), _differences(s2), _differences(s0)
    work = len(d1) * len(d2) * len(d0)
    if work > budget:
        raise BudgetExceededError(work, budget, "difference triples")
    if sizes == (1, 1, 1):
        return MinDistanceReport(math.inf, (0.0, 0.0, 0.0), sizes)

    partial = (g1 * d1[:, None] + g2 * d2[None, :]).ravel()
    scaled = g0 * d0
    pos = np.searchsorted(scaled, -partial)
    lo = np.clip(pos - 1, 0, len(scaled) - 1)
    hi = np.clip(pos, 0, len(scaled) - 1)
    dist_lo = np.abs(partial + scaled[lo])
    dist_hi = np.abs(partial + scaled[hi])
    k = np.where(dist_hi < dist_lo, hi, lo)
    dist = np.minimum(dist_lo, dist_hi)

    # the all-zero difference is not a pair of distinct triples
    zero = np.searchsorted(d1, 0) * len(d2) + np.searchsorted(d2, 0)
    z0 = np.searchsorted(d0, 0)
    if len(d0) > 1:
        k[zero] = z0 + 1
        dist[zero] = scaled[z0 + 1]
    else:
        dist[zero] = np.inf

    best = int(np.argmin(dist))
    i, j = divmod(best, len(d2))
    return MinDistanceReport(float(dist[best]), (float(d1[i]), float(d2[j]), float(d0[k[best]])), sizes)


class Demodulator:
    """Nearest-point search over the full product constellation of one receiver."""

    def __init__(self, gains: Tuple[float, float, float], c: ModConstellation, rx: int,
                 budget: int = ENUMERATION_BUDGET):
        g0, g1, g2 = (LD(g) for g in gains)
        self.sets = c.receiver_sets(rx)
        s1, s2, s0 = self.sets
        self.shape = (len(s1), len(s2), len(s0))
        size = int(np.prod(self.shape))
        if size > budget:
            raise BudgetExceededError(size, budget, "constellation")
        i1, i2, i0 = (x.ravel() for x in np.meshgrid(*(np.arange(n) for n in self.shape), indexing="ij"))
        values = g1 * s1[i1] + g2 * s2[i2] + g0 * s0[i0]
        flat = np.arange(size)
        order = np.lexsort((flat, values))
        self.values = values[order]
        self.flat = flat[order]

    def points(self) -> np.ndarray:
        """Noiseless received values indexed by flat triple index."""
        out = np.empty(len(self.values), dtype=LD)
        out[self.flat] = self.values
        return out

    def flat_index(self, y) -> np.ndarray:
        """Flat index of the nearest triple, ties going to the lexicographically smaller one."""
        y = np.atleast_1d(np.asarray(y, dtype=LD))
        last = len(self.values) - 1
        pos = np.searchsorted(self.values, y)
        hi = np.clip(pos, 0, last)
        lo = np.clip(pos - 1, 0, last)
        lo = np.searchsorted(self.values, self.values[lo])
        dist_lo = np.abs(y - self.values[lo])
        dist_hi = np.abs(y - self.values[hi])
        take_hi = (dist_hi < dist_lo) | ((dist_hi == dist_lo) & (self.flat[hi] < self.flat[lo]))
        return np.where(take_hi, self.flat[hi], self.flat[lo])

    def symbols(self, flat: np.ndarray) -> ReceiverSymbols:
        i1, i2, i0 = np.unravel_index(flat, self.shape)
        s1, s2, s0 = self.sets
        return ReceiverSymbols(s1[i1], s2[i2], s0[i0])

    def __call__(self, y) -> ReceiverSymbols:
        symbols = self.symbols(self.flat_index(y))
        if np.ndim(y) == 0:
            return ReceiverSymbols(symbols.s1[0], symbols.s2[0], symbols.s0[0])
        return symbols


def demodulate(y, gains: Tuple[float, float, float], c: ModConstellation, rx: int,
               budget: int = ENUMERATION_BUDGET) -> ReceiverSymbols:
    return Demodulator(gains, c, rx, budget)(y)


def demodulate_mismatched(y, h_hat: FineGains, c: ModConstellation, rx: int,
                          budget: int = ENUMERATION_BUDGET) -> ReceiverSymbols:
    """Demodulate as if the quantized gains were the true ones."""
    return demodulate(y, effective_gains(h_hat).receiver(rx), c, rx, budget)


def _max_value(c: ModConstellation, *names: str) -> float:
    return float(sum(c.slot_values(name)[-1] for name in names))


def mismatch_offset(h: FineGains, h_hat: FineGains, c: ModConstellation, rx: int) -> float:
    """Largest gap between the true noiseless signal and the one the demodulator assumes.

    The gap is linear in the nonnegative portion values, so its extremes sit
    at the corners of the value box.
    """
    n11, n12, n21, n22 = c.levels.as_tuple()
    if rx == 1:
        terms = [
            (math.ldexp(h_hat.h22 * (h.h11 - h_hat.h11), n11), _max_value(c, "r11c", "r11p")),
            (math.ldexp(h_hat.h12 * (h.h11 - h_hat.h11), n11), _max_value(c, "r21")),
            (math.ldexp(h_hat.h21 * (h.h12 - h_hat.h12), n12), _max_value(c, "r12")),
            (math.ldexp(h_hat.h11 * (h.h12 - h_hat.h12), n12), _max_value(c, "r22c")),
        ]
    else:
        terms = [
            (math.ldexp(h_hat.h12 * (h.h21 - h_hat.h21), n21), _max_value(c, "r21")),
            (math.ldexp(h_hat.h11 * (h.h22 - h_hat.h22), n22), _max_value(c, "r22c", "r22p")),
            (math.ldexp(h_hat.h21 * (h.h22 - h_hat.h22), n22), _max_value(c, "r12")),
            (math.ldexp(h_hat.h22 * (h.h21 - h_hat.h21), n21), _max_value(c, "r11c")),
        ]
    high = sum(max(0.0, coef * top) for coef, top in terms)
    low = sum(min(0.0, coef * top) for coef, top in terms)
    return max(high, -low)


def mismatch_report(h: FineGains, h_hat: FineGains, c: ModConstellation, rx: int,
                    budget: int = ENUMERATION_BUDGET) -> MismatchReport:
    d = min_distance(effective_gains(h).receiver(rx), c, rx, budget).d
    d_prime = min_distance(effective_gains(h_hat).receiver(rx), c, rx, budget).d
    return MismatchReport(d, d_prime, mismatch_offset(h, h_hat, c, rx))


def _true_symbols(c: ModConstellation, u: Dict[str, np.ndarray], rx: int):
    n11, n12, n21, n22 = c.levels.as_tuple()
    if rx == 1:
        return (np.ldexp(u["r11c"] + u["r11p"], n11), np.ldexp(u["r12"], n12),
                np.ldexp(u["r21"], n11) + np.ldexp(u["r22c"], n12))
    return (np.ldexp(u["r21"], n21), np.ldexp(u["r22c"] + u["r22p"], n22),
            np.ldexp(u["r12"], n22) + np.ldexp(u["r11c"], n21))


def _run_batch(rng: np.random.Generator, size: int, h: FineGains, h_tx: FineGains,
               c: ModConstellation, demods: Tuple[Demodulator, Demodulator], noise_scale: float):
    """True and demodulated flat indices at both receivers for ``size`` random trials."""
    u = {}
    for name, window in c.windows:
        if window.width:
            payload = rng.integers(0, 1 << window.width, size)
            u[name] = np.ldexp(payload.astype(LD), -window.end)
        else:
            u[name] = np.zeros(size, dtype=LD)
    x1, x2 = modulate_inputs(h_tx, (u["r11c"] + u["r11p"]).astype(float), u["r12"].astype(float),
                             u["r21"].astype(float), (u["r22c"] + u["r22p"]).astype(float))
    z = rng.standard_normal((2, size)) * noise_scale
    outputs = gauss_channel_apply(h, c.levels, x1, x2, z[0], z[1])

    result = []
    for rx, y, demod in zip((1, 2), outputs, demods):
        sets = c.receiver_sets(rx)
        idx = [np.searchsorted(s, t) for s, t in zip(sets, _true_symbols(c, u, rx))]
        truth = np.ravel_multi_index(idx, demod.shape)
        result.append((truth, demod.flat_index(y)))
    return result


def _simulate_chunk(task):
    h, h_tx, c, seed, index, size, noise_scale, budget = task
    demod_gains = effective_gains(h_tx)
    demods = (Demodulator(demod_gains.receiver(1), c, 1, budget),
              Demodulator(demod_gains.receiver(2), c, 2, budget))
    return _run_batch(child_rng(seed, index), size, h, h_tx, c, demods, noise_scale)


def _simulate(h: FineGains, c: ModConstellation, trials: int, seed: int, mismatched: bool,
              noise_scale: float, budget: int):
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    h_tx = quantize_gains(h, c.levels.max_level) if mismatched else h
    tasks = []
    for index, start in enumerate(range(0, trials, SIM_CHUNK)):
        tasks.append((h, h_tx, c, seed, index, min(SIM_CHUNK, trials - start), noise_scale, budget))
    chunks = parallel_map(_simulate_chunk, tasks)
    return [tuple(np.concatenate([chunk[rx][k] for chunk in chunks]) for k in range(2)) for rx in range(2)]


def mc_symbol_error(h: FineGains, levels: ChannelLevels, a: RateAllocation, trials: int, seed: int,
                    mismatched: bool = False, budget: int = ENUMERATION_BUDGET) -> OutageEstimate:
    """Fraction of trials in which either receiver misses its symbol triple."""
    c = build_constellation(a, levels)
    (t1, e1), (t2, e2) = _simulate(h, c, trials, seed, mismatched, 1.0, budget)
    wrong1, wrong2 = t1 != e1, t2 != e2
    failed = np.flatnonzero(wrong1 | wrong2)
    logger.info("symbol errors: rx1 %d, rx2 %d of %d trials", int(wrong1.sum()), int(wrong2.sum()), trials)
    return OutageEstimate(
        samples=trials,
        failures=int(len(failed)),
        seed=seed,
        failed_indices=tuple(int(i) for i in failed[:MAX_RECORDED_FAILURES]),
        params={"rx1_errors": int(wrong1.sum()), "rx2_errors": int(wrong2.sum()),
                "mismatched": mismatched, "gains": list(h.as_tuple())},
    )


def union_bound_ser(h: FineGains, c: ModConstellation, max_points: int = UNION_BOUND_POINTS) -> float:
    """Pairwise Q-function bound on the either-receiver symbol error rate."""
    g = effective_gains(h)
    total = 0.0
    for rx in (1, 2):
        demod = Demodulator(g.receiver(rx), c, rx)
        points = demod.points().astype(float)
        if len(points) > max_points:
            raise BudgetExceededError(len(points), max_points, "union bound points")
        w1, w2, w0 = c.receiver_weights(rx)
        weights = (w1[:, None, None] * w2[None, :, None] * w0[None, None, :]).ravel()
        gaps = np.abs(points[:, None] - points[None, :])
        tail = norm.sf(gaps / 2)
        np.fill_diagonal(tail, 0.0)
        total += float(weights @ tail.sum(axis=1))
    return total


def _tail_terms(d: float, terms: int) -> Tuple[np.ndarray, np.ndarray]:
    if d <= 14:
        raise PreconditionError(f"Chernoff tail needs d > 14, got {d}")
    ell = np.arange(1, terms + 1, dtype=float)
    return ell, np.exp(-((ell * (d - 8) / 2 - 3) ** 2) / 2)


def chernoff_error_bound(d: float = MIN_DISTANCE_TARGET, terms: int = 64) -> float:
    """Chernoff bound on the symbol error probability at minimum distance ``d``."""
    _, tail = _tail_terms(d, terms)
    return float(tail.sum())


def conditional_entropy_bound(d: float = MIN_DISTANCE_TARGET, terms: int = 64) -> float:
    """Upper bound on H(v | demodulated v) in bits at minimum distance ``d``."""
    ell, tail = _tail_terms(d, terms)
    return 0.5 * math.log2(2 * math.pi * math.exp(1 / 12)) + math.log2(math.e) * 2 * float(((ell ** 2 + ell) * tail).sum())


def _plugin_conditional_entropy(truth: np.ndarray, estimate: np.ndarray, size: int) -> float:
    n = len(truth)
    _, joint = np.unique(truth.astype(np.int64) * size + estimate, return_counts=True)
    _, marginal = np.unique(estimate, return_counts=True)
    joint_h = -np.sum(joint / n * np.log2(joint / n))
    marginal_h = -np.sum(marginal / n * np.log2(marginal / n))
    return max(0.0, float(joint_h - marginal_h))


def empirical_cond_entropy(h: FineGains, levels: ChannelLevels, a: RateAllocation, trials: int, seed: int,
                           noise_scale: float = 1.0, budget: int = ENUMERATION_BUDGET) -> float:
    """Plug-in estimate of H(v | demodulated v), the larger of the two receivers."""
    c = build_constellation(a, levels)
    g = effective_gains(h)
    for rx in (1, 2):
        d = min_distance(g.receiver(rx), c, rx, budget).d
        if d < MIN_DISTANCE_TARGET:
            logger.warning("receiver %d has d = %.3g < %d; the 1.5-bit bound is not claimed",
                           rx, d, MIN_DISTANCE_TARGET)
    results = _simulate(h, c, trials, seed, False, noise_scale, budget)
    return max(_plugin_conditional_entropy(t, e, c.receiver_size(rx))
               for rx, (t, e) in zip((1, 2), results))


class GaussLink(BaseLink):
    """Uncoded transmission over fixed fine gains."""

    def __init__(self, levels: ChannelLevels, allocation: RateAllocation, h: FineGains,
                 mismatched: bool = False, budget: int = ENUMERATION_BUDGET):
        super().__init__(levels, allocation)
        self.h = h
        self.mismatched = mismatched
        self.budget = budget
        self.constellation = build_constellation(allocation, levels)
        self.h_tx = quantize_gains(h, levels.max_level) if mismatched else h
        g = effective_gains(self.h_tx)
        self.demods = (Demodulator(g.receiver(1), self.constellation, 1, budget),
                       Demodulator(g.receiver(2), self.constellation, 2, budget))

    def params(self) -> dict:
        out = super().params()
        out.update({"gains": list(self.h.as_tuple()), "mismatched": self.mismatched})
        return out

    def min_distances(self) -> List[MinDistanceReport]:
        g = effective_gains(self.h)
        return [min_distance(g.receiver(rx), self.constellation, rx, self.budget) for rx in (1, 2)]

    def run_trial(self, rng: np.random.Generator) -> bool:
        batch = _run_batch(rng, 1, self.h, self.h_tx, self.constellation, self.demods, 1.0)
        return all(bool(truth[0] == est[0]) for truth, est in batch)

    def simulate(self, trials: int, seed: int) -> OutageEstimate:
        return mc_symbol_error(self.h, self.levels, self.allocation, trials, seed,
                               self.mismatched, self.budget)
