"""Gaussian X-channel parameters and the matching lower-triangular deterministic channel."""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

import numpy as np

from .constants import MAX_SIGNAL
from .errors import PowerConstraintError, PreconditionError
from .gf2 import BitVec, matvec, toeplitz_from_gain


@dataclass(frozen=True)
class ChannelLevels:
    """Integer gain exponents; link (m, k) has SNR about 2**(2 n_mk)."""

    n11: int
    n12: int
    n21: int
    n22: int

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise PreconditionError(f"{name} must be a nonnegative integer, got {value!r}")

    @property
    def strong_direct(self) -> bool:
        return min(self.n11, self.n22) >= max(self.n12, self.n21)

    def require_strong_direct(self):
        if not self.strong_direct:
            raise PreconditionError(f"{self} violates min(n11, n22) >= max(n12, n21)")

    def relabeled(self) -> "ChannelLevels":
        """Swap the roles of both transmitters and both receivers."""
        return ChannelLevels(self.n22, self.n21, self.n12, self.n11)

    @property
    def offset(self) -> int:
        return (self.n11 - self.n21) + (self.n22 - self.n12)

    @property
    def max_level(self) -> int:
        return max(self.n11, self.n12, self.n21, self.n22)

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.n11, self.n12, self.n21, self.n22)

    def as_dict(self):
        return {"n11": self.n11, "n12": self.n12, "n21": self.n21, "n22": self.n22}

    @classmethod
    def symmetric(cls, n: int) -> "ChannelLevels":
        return cls(n, n, n, n)


def _check_gain(name: str, value, low: float, high: float):
    if not low < value <= high:
        raise PreconditionError(f"{name} = {value} outside ({low}, {high}]")


@dataclass(frozen=True)
class FineGains:
    """Fine channel structure h_mk in (1, 2]."""

    h11: float
    h12: float
    h21: float
    h22: float

    def __post_init__(self):
        for name in ("h11", "h12", "h21", "h22"):
            _check_gain(name, getattr(self, name), 1, 2)

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "FineGains":
        """Uniform draw on (1, 2]^4."""
        return cls(*(2.0 - rng.random(4)).tolist())

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.h11, self.h12, self.h21, self.h22)


@dataclass(frozen=True)
class EffectiveGains:
    """Products of two fine gains seen after pre-multiplying modulation."""

    g10: float
    g11: float
    g12: float
    g20: float
    g21: float
    g22: float

    def __post_init__(self):
        for name in ("g10", "g11", "g12", "g20", "g21", "g22"):
            _check_gain(name, getattr(self, name), 1, 4)

    def receiver(self, rx: int) -> Tuple[float, float, float]:
        """Receiver view ``(g_m0, g_m1, g_m2)``."""
        if rx == 1:
            return (self.g10, self.g11, self.g12)
        if rx == 2:
            return (self.g20, self.g21, self.g22)
        raise PreconditionError(f"receiver must be 1 or 2, got {rx}")


@dataclass(frozen=True)
class DetChannelGains:
    """Per-receiver gain triples ``(g_m0, g_m1, g_m2)`` in (1, 2]."""

    rx1: Tuple[float, float, float]
    rx2: Tuple[float, float, float]

    def __post_init__(self):
        for rx, triple in ((1, self.rx1), (2, self.rx2)):
            if len(triple) != 3:
                raise PreconditionError(f"receiver {rx} needs three gains")
            for k, value in enumerate(triple):
                _check_gain(f"g{rx}{k}", value, 1, 2)

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "DetChannelGains":
        """Uniform draw on (1, 2]^(2x3)."""
        draw = (2.0 - rng.random(6)).tolist()
        return cls(tuple(draw[:3]), tuple(draw[3:]))

    def receiver(self, rx: int) -> Tuple[float, float, float]:
        if rx == 1:
            return self.rx1
        if rx == 2:
            return self.rx2
        raise PreconditionError(f"receiver must be 1 or 2, got {rx}")


@dataclass(frozen=True)
class DetInputs:
    """Deterministic channel inputs; u11, u21 have n11 levels and u12, u22 have n22."""

    u11: BitVec
    u12: BitVec
    u21: BitVec
    u22: BitVec

    def check(self, levels: ChannelLevels):
        expected = {"u11": levels.n11, "u21": levels.n11, "u12": levels.n22, "u22": levels.n22}
        for name, length in expected.items():
            if getattr(self, name).length != length:
                raise PreconditionError(f"{name} has {getattr(self, name).length} levels, expected {length}")

    @classmethod
    def zeros(cls, levels: ChannelLevels) -> "DetInputs":
        return cls(
            BitVec.zeros(levels.n11),
            BitVec.zeros(levels.n22),
            BitVec.zeros(levels.n11),
            BitVec.zeros(levels.n22),
        )


def effective_gains(h: FineGains) -> EffectiveGains:
    return EffectiveGains(
        g10=h.h11 * h.h12,
        g11=h.h11 * h.h22,
        g12=h.h12 * h.h21,
        g20=h.h22 * h.h21,
        g21=h.h21 * h.h12,
        g22=h.h22 * h.h11,
    )


def det_channel_apply(g: DetChannelGains, inputs: DetInputs, levels: ChannelLevels) -> Tuple[BitVec, BitVec]:
    """Outputs of both receivers of the deterministic X-channel.

    Receiver 1 sees ``G11 u11 + G12 (0; u12c) + G10 (u21 + (0; u22c))`` in
    n11 levels, receiver 2 the mirror image in n22 levels.
    """
    levels.require_strong_direct()
    if min(levels.n11, levels.n22) < 1:
        raise PreconditionError("deterministic receivers need n11, n22 >= 1")
    inputs.check(levels)
    n11, n12, n21, n22 = levels.as_tuple()

    g10, g11, g12 = g.rx1
    y1 = (
        matvec(toeplitz_from_gain(g11, n11), inputs.u11)
        ^ matvec(toeplitz_from_gain(g12, n11), inputs.u12.top(n12, n11))
        ^ matvec(toeplitz_from_gain(g10, n11), inputs.u21 ^ inputs.u22.top(n12, n11))
    )

    g20, g21, g22 = g.rx2
    y2 = (
        matvec(toeplitz_from_gain(g22, n22), inputs.u22)
        ^ matvec(toeplitz_from_gain(g21, n22), inputs.u21.top(n21, n22))
        ^ matvec(toeplitz_from_gain(g20, n22), inputs.u12 ^ inputs.u11.top(n21, n22))
    )
    return y1, y2


def gauss_channel_apply(h: FineGains, levels: ChannelLevels, x1, x2, z1, z2):
    """Noisy real outputs ``y_m = 2^n_m1 h_m1 x1 + 2^n_m2 h_m2 x2 + z_m``.

    Works elementwise on arrays and scalars and returns ``np.longdouble`` values.
    """
    ld = np.longdouble
    x1, x2, z1, z2 = (np.asarray(v, dtype=ld) for v in (x1, x2, z1, z2))
    y1 = np.ldexp(ld(h.h11), levels.n11) * x1 + np.ldexp(ld(h.h12), levels.n12) * x2 + z1
    y2 = np.ldexp(ld(h.h21), levels.n21) * x1 + np.ldexp(ld(h.h22), levels.n22) * x2 + z2
    return y1, y2


def modulate_inputs(hq: FineGains, u11, u12, u21, u22):
    """Transmit signals ``x1 = hq22 u11 + hq12 u21`` and ``x2 = hq11 u22 + hq21 u12``."""
    for name, u in (("u11", u11), ("u12", u12), ("u21", u21), ("u22", u22)):
        if np.any(np.abs(u) > MAX_SIGNAL):
            raise PowerConstraintError(f"|{name}| exceeds {MAX_SIGNAL}")
    x1 = hq.h22 * u11 + hq.h12 * u21
    x2 = hq.h11 * u22 + hq.h21 * u12
    return x1, x2


def _quantize(value: float, bits: int) -> float:
    scale = 1 << bits
    q = Fraction(math.floor(Fraction(value) * scale), scale)
    if q <= 1:
        q = 1 + Fraction(1, scale)
    return float(q)


def quantize_gains(h: FineGains, bits: int) -> FineGains:
    """Floor each gain to ``bits`` fractional binary digits, staying inside (1, 2]."""
    if bits < 1:
        raise PreconditionError(f"bits must be >= 1, got {bits}")
    return FineGains(*(_quantize(v, bits) for v in h.as_tuple()))
