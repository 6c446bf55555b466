"""Bit vectors and lower-triangular Toeplitz matrices over GF(2).

Vectors are stored word-packed in a Python int together with an explicit
length. Level 1 is the most significant bit of the word, so a vector
``(x1, ..., xn)`` has ``word = x1 * 2**(n-1) + ... + xn``.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .errors import NoSolutionError, NotUniqueError, PreconditionError

Real = Union[int, float, Fraction]


@dataclass(frozen=True)
class BitVec:
    """Immutable bit vector, level 1 first."""

    length: int
    word: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise PreconditionError(f"bit vector length must be >= 1, got {self.length}")
        if self.word < 0 or self.word >> self.length:
            raise PreconditionError(f"word {self.word:#x} does not fit in {self.length} bits")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "BitVec":
        """Build a vector from a level-ordered sequence of 0/1 values."""
        word = 0
        for b in bits:
            if b not in (0, 1):
                raise PreconditionError(f"bit values must be 0 or 1, got {b}")
            word = (word << 1) | b
        return cls(len(bits), word)

    @classmethod
    def zeros(cls, length: int) -> "BitVec":
        return cls(length, 0)

    @classmethod
    def unit(cls, length: int, level: int) -> "BitVec":
        """Vector with a single one at ``level``."""
        if not 1 <= level <= length:
            raise PreconditionError(f"level {level} outside 1..{length}")
        return cls(length, 1 << (length - level))

    def bit(self, level: int) -> int:
        return (self.word >> (self.length - level)) & 1

    def bits(self) -> List[int]:
        return [self.bit(i) for i in range(1, self.length + 1)]

    def is_zero(self) -> bool:
        return self.word == 0

    def __xor__(self, other: "BitVec") -> "BitVec":
        if other.length != self.length:
            raise PreconditionError(f"length mismatch: {self.length} vs {other.length}")
        return BitVec(self.length, self.word ^ other.word)

    def top(self, visible: int, length: int) -> "BitVec":
        """The first ``visible`` levels placed at the bottom of a ``length``-level vector.

        This is the ``(0; v^c)`` operation that moves the common portion of a
        cross link below ``length - visible`` zero levels.
        """
        if not 0 <= visible <= min(self.length, length):
            raise PreconditionError(f"cannot take {visible} levels of {self.length} into {length}")
        return BitVec(length, self.word >> (self.length - visible))

    def window(self, start: int, width: int) -> int:
        """Integer value of levels ``start .. start+width-1`` read MSB first."""
        if width == 0:
            return 0
        if start < 1 or start + width - 1 > self.length:
            raise PreconditionError(f"window {start}+{width} outside 1..{self.length}")
        return (self.word >> (self.length - start - width + 1)) & ((1 << width) - 1)

    def with_window(self, start: int, width: int, value: int) -> "BitVec":
        """Copy with levels ``start .. start+width-1`` replaced by ``value``."""
        if width == 0:
            return self
        if start < 1 or start + width - 1 > self.length:
            raise PreconditionError(f"window {start}+{width} outside 1..{self.length}")
        if value < 0 or value >> width:
            raise PreconditionError(f"value {value} does not fit in {width} bits")
        shift = self.length - start - width + 1
        mask = ((1 << width) - 1) << shift
        return BitVec(self.length, (self.word & ~mask) | (value << shift))


@dataclass(frozen=True)
class LowerToeplitzGF2:
    """Lower-triangular binary Toeplitz matrix defined by its first column."""

    dim: int
    first_column: BitVec

    def __post_init__(self):
        if self.first_column.length != self.dim:
            raise PreconditionError("first column length must equal dim")
        if self.first_column.bit(1) != 1:
            raise PreconditionError("diagonal entry must be 1")

    def entry(self, i: int, j: int) -> int:
        if i < j:
            return 0
        return self.first_column.bit(i - j + 1)

    def column(self, j: int) -> BitVec:
        """Column ``j``: the first column shifted down by ``j - 1`` levels."""
        if not 1 <= j <= self.dim:
            raise PreconditionError(f"column {j} outside 1..{self.dim}")
        return BitVec(self.dim, self.first_column.word >> (j - 1))

    def as_array(self) -> np.ndarray:
        """Dense 0/1 matrix, rows and columns in level order."""
        out = np.zeros((self.dim, self.dim), dtype=np.uint8)
        for j in range(1, self.dim + 1):
            out[:, j - 1] = self.column(j).bits()
        return out


@dataclass(frozen=True)
class Gf2System:
    """Stacked linear system ``sum_k c_k * columns[k] = rhs``."""

    columns: Tuple[BitVec, ...]
    rhs: BitVec

    def __post_init__(self):
        if len(self.columns) > self.rhs.length:
            raise PreconditionError(f"{len(self.columns)} columns exceed dimension {self.rhs.length}")
        for col in self.columns:
            if col.length != self.rhs.length:
                raise PreconditionError("all columns must match the rhs length")


@lru_cache(maxsize=8192)
def toeplitz_from_gain(g: Real, n: int) -> LowerToeplitzGF2:
    """Channel matrix whose first column holds the leading ``n`` binary digits of ``g``."""
    if n < 1:
        raise PreconditionError(f"dimension must be >= 1, got {n}")
    exact = Fraction(g)
    if not 1 < exact <= 2:
        raise PreconditionError(f"gain {g} outside (1, 2]")
    top = 1 << (n - 1)
    # 2 is read as 1.111... so the diagonal stays 1
    fraction_bits = min(math.floor((exact - 1) * top), top - 1)
    return LowerToeplitzGF2(n, BitVec(n, top | fraction_bits))


def matvec(m: LowerToeplitzGF2, x: BitVec) -> BitVec:
    """Product ``M x`` over GF(2)."""
    if x.length != m.dim:
        raise PreconditionError(f"vector length {x.length} does not match dim {m.dim}")
    acc = 0
    word = x.word
    while word:
        low = word & -word
        level = x.length - low.bit_length() + 1
        acc ^= m.first_column.word >> (level - 1)
        word ^= low
    return BitVec(m.dim, acc)


def leading_index(x: BitVec) -> Union[int, float]:
    """Smallest level holding a one, ``math.inf`` for the zero vector."""
    if x.word == 0:
        return math.inf
    return x.length - x.word.bit_length() + 1


def _reduce(word: int, mask: int, basis: Dict[int, Tuple[int, int]]) -> Tuple[int, int]:
    for pivot in sorted(basis, reverse=True):
        if (word >> pivot) & 1:
            vec, combo = basis[pivot]
            word ^= vec
            mask ^= combo
    return word, mask


def solve_unique(system: Gf2System) -> Tuple[int, ...]:
    """Coefficients of the unique combination of columns equal to ``rhs``.

    Raises NotUniqueError if the columns are dependent and NoSolutionError if
    they are independent but ``rhs`` lies outside their span.
    """
    basis: Dict[int, Tuple[int, int]] = {}
    for k, col in enumerate(system.columns):
        word, mask = _reduce(col.word, 1 << k, basis)
        if word == 0:
            raise NotUniqueError(f"column {k + 1} is in the span of the previous columns")
        basis[word.bit_length() - 1] = (word, mask)

    residual, mask = _reduce(system.rhs.word, 0, basis)
    if residual:
        raise NoSolutionError("right-hand side is outside the column span")
    return tuple((mask >> k) & 1 for k in range(len(system.columns)))


def rank(columns: Sequence[BitVec]) -> int:
    """GF(2) rank of a list of equal-length vectors."""
    if columns:
        length = columns[0].length
        if any(c.length != length for c in columns):
            raise PreconditionError("all columns must have the same length")
    basis: Dict[int, Tuple[int, int]] = {}
    for col in columns:
        word, _ = _reduce(col.word, 0, basis)
        if word:
            basis[word.bit_length() - 1] = (word, 0)
    return len(basis)
