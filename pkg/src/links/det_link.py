"""Deterministic X-channel link: bit packing, GF(2) decoding and round trips."""
import logging
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Tuple

import numpy as np

from ..allocation import RATE_NAMES, RateAllocation
from ..channel import ChannelLevels, DetChannelGains, DetInputs, det_channel_apply
from ..errors import AlignmentFailure, NotUniqueError, PreconditionError
from ..gf2 import BitVec, Gf2System, rank, solve_unique, toeplitz_from_gain
from .base_link import BaseLink

logger = logging.getLogger(__name__)

# Slots decoded at each receiver, and the slots aligned into its interference sum
DESIRED = {1: ("r11c", "r11p", "r12"), 2: ("r22c", "r22p", "r21")}
INTERFERING = {1: ("r21", "r22c", "r22p"), 2: ("r12", "r11c", "r11p")}
SLOT_VECTOR = {"r11c": "u11", "r11p": "u11", "r12": "u12", "r21": "u21", "r22c": "u22", "r22p": "u22"}


class SlotWindow(NamedTuple):
    vector: str
    start: int
    width: int

    @property
    def end(self) -> int:
        """Last occupied level (start - 1 for an empty window)."""
        return self.start + self.width - 1


@dataclass(frozen=True)
class DetMessages:
    """Payload of every rate slot, read MSB first."""

    r11c: int = 0
    r11p: int = 0
    r12: int = 0
    r21: int = 0
    r22c: int = 0
    r22p: int = 0

    def check(self, a: RateAllocation):
        for name in RATE_NAMES:
            value, width = getattr(self, name), getattr(a, name)
            if value < 0 or value >> width:
                raise PreconditionError(f"{name} payload {value} does not fit in {width} bits")

    @classmethod
    def random(cls, a: RateAllocation, rng: np.random.Generator) -> "DetMessages":
        return cls(**{name: int(rng.integers(0, 1 << getattr(a, name))) for name in RATE_NAMES})

    def part(self, rx: int) -> Dict[str, int]:
        return {name: getattr(self, name) for name in DESIRED[rx]}


def slot_layout(a: RateAllocation, levels: ChannelLevels, guard: int = 0) -> Dict[str, SlotWindow]:
    """Level windows of every slot inside its input vector.

    Common portions start at the top, privates right below the common
    region, and cross messages right below the levels hidden from the cross
    receiver. ``guard`` pushes every window down by that many zero levels.
    """
    n11, n12, n21, n22 = levels.as_tuple()
    layout = {
        "r11c": SlotWindow("u11", 1 + guard, a.r11c),
        "r11p": SlotWindow("u11", n21 + 1 + guard, a.r11p),
        "r12": SlotWindow("u12", n22 - n21 + 1 + guard, a.r12),
        "r21": SlotWindow("u21", n11 - n12 + 1 + guard, a.r21),
        "r22c": SlotWindow("u22", 1 + guard, a.r22c),
        "r22p": SlotWindow("u22", n12 + 1 + guard, a.r22p),
    }
    lengths = {"u11": n11, "u21": n11, "u12": n22, "u22": n22}
    for name, window in layout.items():
        if window.width and window.end > lengths[window.vector]:
            raise PreconditionError(
                f"{name} needs levels {window.start}..{window.end} of {window.vector} "
                f"which has {lengths[window.vector]}")
    for common, private in (("r11c", "r11p"), ("r22c", "r22p")):
        if layout[common].width and layout[private].width and layout[common].end >= layout[private].start:
            raise PreconditionError(f"{common} overlaps {private}")
    return layout


def pack_inputs(msgs: DetMessages, a: RateAllocation, levels: ChannelLevels) -> DetInputs:
    msgs.check(a)
    vectors = {
        "u11": BitVec.zeros(levels.n11), "u21": BitVec.zeros(levels.n11),
        "u12": BitVec.zeros(levels.n22), "u22": BitVec.zeros(levels.n22),
    }
    for name, window in slot_layout(a, levels).items():
        vectors[window.vector] = vectors[window.vector].with_window(window.start, window.width, getattr(msgs, name))
    return DetInputs(**vectors)


def unpack(inputs: DetInputs, a: RateAllocation, levels: ChannelLevels) -> DetMessages:
    """Read the slot payloads back out of packed inputs."""
    inputs.check(levels)
    return DetMessages(**{
        name: getattr(inputs, window.vector).window(window.start, window.width)
        for name, window in slot_layout(a, levels).items()
    })


@dataclass(frozen=True)
class ReceiverSystem:
    """Columns of one receiver's decoding system and what each unknown is."""

    rx: int
    dim: int
    columns: Tuple[BitVec, ...]
    unknowns: Tuple[Tuple[str, int], ...]
    interference_levels: Tuple[int, ...]


def _rx_geometry(levels: ChannelLevels, rx: int):
    """Per vector: (receiver dimension, visible levels, shift, gain index) at ``rx``."""
    n11, n12, n21, n22 = levels.as_tuple()
    if rx == 1:
        return n11, {"u11": (n11, 0, 1), "u12": (n12, n11 - n12, 2),
                     "u21": (n11, 0, 0), "u22": (n12, n11 - n12, 0)}
    return n22, {"u22": (n22, 0, 2), "u21": (n21, n22 - n21, 1),
                 "u12": (n22, 0, 0), "u11": (n21, n22 - n21, 0)}


def receiver_columns(gains: Tuple[float, float, float], a: RateAllocation,
                     levels: ChannelLevels, rx: int) -> ReceiverSystem:
    """Stacked decoding system: desired bits first, then the aligned interference sum.

    A desired bit below the visible levels of its cross link gets a zero
    column, so the system then cannot be uniquely solved.
    """
    levels.require_strong_direct()
    dim, geometry = _rx_geometry(levels, rx)
    matrices = [toeplitz_from_gain(g, dim) for g in gains]
    layout = slot_layout(a, levels)

    columns: List[BitVec] = []
    unknowns: List[Tuple[str, int]] = []
    for name in DESIRED[rx]:
        window = layout[name]
        visible, shift, gain = geometry[window.vector]
        for offset in range(window.width):
            level = window.start + offset
            if level <= visible:
                columns.append(matrices[gain].column(level + shift))
            else:
                columns.append(BitVec.zeros(dim))
            unknowns.append((name, offset))

    sum_levels = set()
    for name in INTERFERING[rx]:
        window = layout[name]
        visible, shift, _ = geometry[window.vector]
        for level in range(window.start, window.end + 1):
            if level <= visible:
                sum_levels.add(level + shift)
    for level in sorted(sum_levels):
        columns.append(matrices[0].column(level))
        unknowns.append(("sum", level))

    return ReceiverSystem(rx, dim, tuple(columns), tuple(unknowns), tuple(sorted(sum_levels)))


def decode_receiver(y: BitVec, gains: Tuple[float, float, float], a: RateAllocation,
                    levels: ChannelLevels, rx: int) -> Dict[str, int]:
    """Desired slot payloads at receiver ``rx``; AlignmentFailure if not unique."""
    system = receiver_columns(gains, a, levels, rx)
    if y.length != system.dim:
        raise PreconditionError(f"output has {y.length} levels, receiver {rx} has {system.dim}")
    if not system.columns:
        return {name: 0 for name in DESIRED[rx]}
    if len(system.columns) > system.dim:
        raise AlignmentFailure(rx, rank(list(system.columns)), len(system.columns))
    try:
        coefficients = solve_unique(Gf2System(system.columns, y))
    except NotUniqueError:
        raise AlignmentFailure(rx, rank(list(system.columns)), len(system.columns)) from None

    widths = {name: getattr(a, name) for name in DESIRED[rx]}
    decoded = {name: 0 for name in DESIRED[rx]}
    for (name, offset), bit in zip(system.unknowns, coefficients):
        if name != "sum" and bit:
            decoded[name] |= 1 << (widths[name] - 1 - offset)
    return decoded


def decodable(g: DetChannelGains, a: RateAllocation, levels: ChannelLevels) -> bool:
    """True when both receivers' decoding systems have full column rank."""
    for rx in (1, 2):
        system = receiver_columns(g.receiver(rx), a, levels, rx)
        if rank(list(system.columns)) < len(system.columns):
            return False
    return True


def roundtrip_ok(msgs: DetMessages, a: RateAllocation, levels: ChannelLevels, g: DetChannelGains) -> bool:
    """Pack, transmit and decode at both receivers; True when nothing is lost."""
    y1, y2 = det_channel_apply(g, pack_inputs(msgs, a, levels), levels)
    try:
        for rx, y in ((1, y1), (2, y2)):
            if decode_receiver(y, g.receiver(rx), a, levels, rx) != msgs.part(rx):
                return False
    except AlignmentFailure as exc:
        logger.debug("alignment failure: %s", exc)
        return False
    return True


class DetLink(BaseLink):
    """Random messages over random deterministic gains."""

    def run_trial(self, rng: np.random.Generator) -> bool:
        g = DetChannelGains.sample(rng)
        msgs = DetMessages.random(self.allocation, rng)
        return roundtrip_ok(msgs, self.allocation, self.levels, g)
