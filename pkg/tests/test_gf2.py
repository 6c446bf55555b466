import itertools
import math
import unittest
from fractions import Fraction

import numpy as np

from src.errors import NoSolutionError, NotUniqueError, PreconditionError
from src.gf2 import (BitVec, Gf2System, LowerToeplitzGF2, leading_index, matvec, rank, solve_unique,
                     toeplitz_from_gain)


def random_vec(rng, length):
    return BitVec(length, int(rng.integers(0, 1 << length)))


class TestBitVec(unittest.TestCase):
    def test_from_bits_puts_level_one_first(self):
        v = BitVec.from_bits([1, 0, 1, 1])
        self.assertEqual(v.word, 0b1011)
        self.assertEqual(v.bits(), [1, 0, 1, 1])
        self.assertEqual(v.bit(1), 1)
        self.assertEqual(v.bit(2), 0)

    def test_word_must_fit(self):
        with self.assertRaises(PreconditionError):
            BitVec(3, 8)

    def test_windows(self):
        v = BitVec.zeros(8).with_window(3, 3, 0b101)
        self.assertEqual(v.bits(), [0, 0, 1, 0, 1, 0, 0, 0])
        self.assertEqual(v.window(3, 3), 0b101)
        self.assertEqual(v.window(5, 0), 0)

    def test_top_moves_levels_down(self):
        v = BitVec.from_bits([1, 1, 0, 1, 0, 0])
        self.assertEqual(v.top(3, 5).bits(), [0, 0, 1, 1, 0])


class TestToeplitz(unittest.TestCase):
    def test_example_matrix(self):
        m = toeplitz_from_gain(1.3125, 4)
        self.assertEqual(m.first_column.bits(), [1, 0, 1, 0])
        for bits in itertools.product((0, 1), repeat=4):
            x1, x2, x3, x4 = bits
            y = matvec(m, BitVec.from_bits(bits))
            self.assertEqual(y.bits(), [x1, x2, x1 ^ x3, x2 ^ x4])

    def test_example_output(self):
        m = toeplitz_from_gain(1.3125, 4)
        self.assertEqual(matvec(m, BitVec.from_bits([1, 0, 1, 0])).bits(), [1, 0, 0, 0])

    def test_gain_just_above_one_is_identity(self):
        m = toeplitz_from_gain(Fraction(1) + Fraction(1, 2 ** 60), 4)
        np.testing.assert_array_equal(m.as_array(), np.eye(4, dtype=np.uint8))

    def test_gain_two_is_all_ones(self):
        self.assertEqual(toeplitz_from_gain(2.0, 3).first_column.bits(), [1, 1, 1])

    def test_gain_outside_range(self):
        with self.assertRaises(PreconditionError):
            toeplitz_from_gain(1.0, 4)
        with self.assertRaises(PreconditionError):
            toeplitz_from_gain(2.5, 4)

    def test_lower_triangular_with_unit_diagonal(self):
        a = toeplitz_from_gain(1.7, 6).as_array()
        np.testing.assert_array_equal(np.triu(a, 1), 0)
        np.testing.assert_array_equal(np.diag(a), 1)

    def test_matvec_matches_truncated_product(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(1, 12))
            m = toeplitz_from_gain(float(2 - rng.random()), n)
            x = random_vec(rng, n)
            dense = (m.as_array().astype(int) @ np.array(x.bits())) % 2
            self.assertEqual(matvec(m, x).bits(), dense.tolist())

    def test_zero_vector(self):
        m = toeplitz_from_gain(1.9, 5)
        self.assertTrue(matvec(m, BitVec.zeros(5)).is_zero())

    def test_matvec_keeps_leading_index(self):
        rng = np.random.default_rng(12)
        for _ in range(10_000):
            n = int(rng.integers(1, 24))
            m = toeplitz_from_gain(float(2 - rng.random()), n)
            x = random_vec(rng, n)
            self.assertEqual(leading_index(matvec(m, x)), leading_index(x))

    def test_matvec_is_linear(self):
        rng = np.random.default_rng(13)
        for _ in range(2000):
            n = int(rng.integers(1, 24))
            m = toeplitz_from_gain(float(2 - rng.random()), n)
            x, y = random_vec(rng, n), random_vec(rng, n)
            self.assertEqual(matvec(m, x ^ y), matvec(m, x) ^ matvec(m, y))

    def test_diagonal_must_be_one(self):
        with self.assertRaises(PreconditionError):
            LowerToeplitzGF2(3, BitVec.from_bits([0, 1, 1]))


class TestLeadingIndex(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(leading_index(BitVec.from_bits([0, 0, 1, 0])), 3)
        self.assertEqual(leading_index(BitVec.from_bits([1, 1, 1])), 1)
        self.assertEqual(leading_index(BitVec.zeros(4)), math.inf)


class TestSolve(unittest.TestCase):
    def test_identity(self):
        columns = tuple(BitVec.unit(3, level) for level in (1, 2, 3))
        rhs = BitVec.from_bits([1, 0, 1])
        self.assertEqual(solve_unique(Gf2System(columns, rhs)), (1, 0, 1))

    def test_equal_columns(self):
        col = BitVec.from_bits([1, 1, 0])
        with self.assertRaises(NotUniqueError):
            solve_unique(Gf2System((col, col), BitVec.zeros(3)))

    def test_rhs_outside_span(self):
        columns = (BitVec.unit(3, 1), BitVec.unit(3, 2))
        with self.assertRaises(NoSolutionError):
            solve_unique(Gf2System(columns, BitVec.unit(3, 3)))

    def test_too_many_columns(self):
        with self.assertRaises(PreconditionError):
            Gf2System(tuple(BitVec.unit(2, 1) for _ in range(3)), BitVec.zeros(2))

    def test_random_full_rank_matches_exhaustive_search(self):
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 1000:
            columns = tuple(random_vec(rng, 8) for _ in range(8))
            if rank(columns) < 8:
                continue
            rhs = random_vec(rng, 8)
            expected = None
            for coeffs in itertools.product((0, 1), repeat=8):
                acc = 0
                for c, col in zip(coeffs, columns):
                    if c:
                        acc ^= col.word
                if acc == rhs.word:
                    expected = coeffs
                    break
            self.assertEqual(solve_unique(Gf2System(columns, rhs)), expected)
            checked += 1


class TestRank(unittest.TestCase):
    def test_empty(self):
        self.assertEqual(rank([]), 0)

    def test_independent(self):
        self.assertEqual(rank([BitVec.unit(5, level) for level in range(1, 5)]), 4)

    def test_matches_span_size(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            columns = [random_vec(rng, 4) for _ in range(6)]
            span = set()
            for coeffs in itertools.product((0, 1), repeat=6):
                acc = 0
                for c, col in zip(coeffs, columns):
                    if c:
                        acc ^= col.word
                span.add(acc)
            self.assertEqual(2 ** rank(columns), len(span))

    def test_matches_span_size_up_to_ten(self):
        rng = np.random.default_rng(6)
        for _ in range(150):
            length = int(rng.integers(1, 11))
            columns = [random_vec(rng, length) for _ in range(int(rng.integers(1, 11)))]
            span = {0}
            for col in columns:
                span |= {word ^ col.word for word in span}
            self.assertEqual(2 ** rank(columns), len(span))

    def test_dependent_columns(self):
        a, b = BitVec.from_bits([1, 0, 1, 1]), BitVec.from_bits([0, 1, 1, 0])
        self.assertEqual(rank([a, b, a ^ b, BitVec.zeros(4)]), 2)

    def test_length_mismatch(self):
        with self.assertRaises(PreconditionError):
            rank([BitVec.zeros(3), BitVec.zeros(4)])


if __name__ == "__main__":
    unittest.main()
