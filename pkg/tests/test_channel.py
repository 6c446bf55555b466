import math
import unittest
from fractions import Fraction

import numpy as np

from src.channel import (ChannelLevels, DetChannelGains, DetInputs, FineGains, det_channel_apply, effective_gains,
                         gauss_channel_apply, modulate_inputs, quantize_gains)
from src.errors import PowerConstraintError, PreconditionError
from src.gf2 import BitVec, leading_index


def gain_matrix(g, n):
    """Dense lower-triangular Toeplitz matrix of the leading binary digits of g in (1, 2)."""
    digits = [math.floor(Fraction(g) * 2 ** k) % 2 for k in range(n)]
    return np.array([[digits[i - j] if i >= j else 0 for j in range(n)] for i in range(n)])


def random_bits(rng, n):
    return rng.integers(0, 2, n)


def random_inputs(rng, levels):
    lengths = (levels.n11, levels.n22, levels.n11, levels.n22)
    return DetInputs(*(BitVec.from_bits(random_bits(rng, n).tolist()) for n in lengths))


class TestChannelLevels(unittest.TestCase):
    def test_strong_direct(self):
        self.assertTrue(ChannelLevels(10, 8, 4, 13).strong_direct)
        self.assertFalse(ChannelLevels(3, 5, 5, 3).strong_direct)
        with self.assertRaises(PreconditionError):
            ChannelLevels(3, 5, 5, 3).require_strong_direct()

    def test_negative_level(self):
        with self.assertRaises(PreconditionError):
            ChannelLevels(1, -1, 0, 1)

    def test_relabeled_and_offset(self):
        n = ChannelLevels(13, 4, 8, 10)
        self.assertEqual(n.relabeled().as_tuple(), (10, 8, 4, 13))
        self.assertEqual(ChannelLevels(10, 8, 4, 13).offset, 11)


class TestGains(unittest.TestCase):
    def test_effective_gains(self):
        g = effective_gains(FineGains(1.5, 1.25, 1.75, 1.1))
        self.assertAlmostEqual(g.g10, 1.875)
        self.assertAlmostEqual(g.g11, 1.65)
        self.assertAlmostEqual(g.g12, 2.1875)
        self.assertAlmostEqual(g.g20, 1.925)
        self.assertAlmostEqual(g.g21, 2.1875)
        self.assertAlmostEqual(g.g22, 1.65)

    def test_boundary_products(self):
        g = effective_gains(FineGains(2.0, 2.0, 2.0, 2.0))
        self.assertEqual(g.receiver(1), (4.0, 4.0, 4.0))
        self.assertEqual(g.receiver(2), (4.0, 4.0, 4.0))

    def test_gain_range(self):
        with self.assertRaises(PreconditionError):
            FineGains(1.0, 1.5, 1.5, 1.5)

    def test_sample_in_range(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            h = FineGains.sample(rng)
            self.assertTrue(all(1 < v <= 2 for v in h.as_tuple()))

    def test_effective_gains_in_range(self):
        rng = np.random.default_rng(4)
        for _ in range(10_000):
            g = effective_gains(FineGains.sample(rng))
            for rx in (1, 2):
                self.assertTrue(all(1 < v <= 4 for v in g.receiver(rx)))


class TestDetChannel(unittest.TestCase):
    def setUp(self):
        self.levels = ChannelLevels(6, 4, 5, 8)
        self.g = DetChannelGains((1.3, 1.7, 1.45), (1.9, 1.2, 1.55))

    def test_zero_inputs(self):
        y1, y2 = det_channel_apply(self.g, DetInputs.zeros(self.levels), self.levels)
        self.assertTrue(y1.is_zero())
        self.assertTrue(y2.is_zero())
        self.assertEqual((y1.length, y2.length), (6, 8))

    def test_single_bit_shift(self):
        for level in range(1, self.levels.n21 + 1):
            inputs = DetInputs(BitVec.unit(6, level), BitVec.zeros(8), BitVec.zeros(6), BitVec.zeros(8))
            y1, y2 = det_channel_apply(self.g, inputs, self.levels)
            self.assertEqual(leading_index(y1), level)
            self.assertEqual(leading_index(y2), level + self.levels.n22 - self.levels.n21)

    def test_wrong_input_length(self):
        inputs = DetInputs(BitVec.zeros(5), BitVec.zeros(8), BitVec.zeros(6), BitVec.zeros(8))
        with self.assertRaises(PreconditionError):
            det_channel_apply(self.g, inputs, self.levels)

    def test_symmetric_hand_example(self):
        levels = ChannelLevels.symmetric(2)
        g = DetChannelGains((1.75, 1.5, 1.25), (1.25, 1.5, 1.75))
        inputs = DetInputs(BitVec.from_bits([1, 0]), BitVec.from_bits([0, 1]),
                           BitVec.from_bits([1, 0]), BitVec.zeros(2))
        y1, y2 = det_channel_apply(g, inputs, levels)
        self.assertEqual(y1.bits(), [0, 1])
        self.assertEqual(y2.bits(), [0, 0])

    def test_symmetric_matches_dense_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            n = int(rng.integers(1, 12))
            levels = ChannelLevels.symmetric(n)
            g = DetChannelGains.sample(rng)
            u11, u12, u21, u22 = (random_bits(rng, n) for _ in range(4))
            inputs = DetInputs(*(BitVec.from_bits(u.tolist()) for u in (u11, u12, u21, u22)))
            y1, y2 = det_channel_apply(g, inputs, levels)
            g10, g11, g12 = g.rx1
            g20, g21, g22 = g.rx2
            expected1 = (gain_matrix(g11, n) @ u11 + gain_matrix(g12, n) @ u12
                         + gain_matrix(g10, n) @ (u21 + u22)) % 2
            expected2 = (gain_matrix(g22, n) @ u22 + gain_matrix(g21, n) @ u21
                         + gain_matrix(g20, n) @ (u12 + u11)) % 2
            self.assertEqual(y1.bits(), expected1.tolist())
            self.assertEqual(y2.bits(), expected2.tolist())

    def test_linear_in_inputs(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            n11, n22 = (int(v) for v in rng.integers(1, 12, 2))
            top = min(n11, n22)
            levels = ChannelLevels(n11, int(rng.integers(0, top + 1)), int(rng.integers(0, top + 1)), n22)
            g = DetChannelGains.sample(rng)
            a, b = random_inputs(rng, levels), random_inputs(rng, levels)
            both = DetInputs(a.u11 ^ b.u11, a.u12 ^ b.u12, a.u21 ^ b.u21, a.u22 ^ b.u22)
            ya1, ya2 = det_channel_apply(g, a, levels)
            yb1, yb2 = det_channel_apply(g, b, levels)
            self.assertEqual(det_channel_apply(g, both, levels), (ya1 ^ yb1, ya2 ^ yb2))


class TestGaussChannel(unittest.TestCase):
    def test_zero_inputs_pass_noise(self):
        h = FineGains(1.5, 1.25, 1.75, 1.1)
        y1, y2 = gauss_channel_apply(h, ChannelLevels(3, 2, 2, 3), 0.0, 0.0, 0.3, -0.7)
        self.assertEqual((float(y1), float(y2)), (0.3, -0.7))
        self.assertEqual(y1.dtype, np.longdouble)

    def test_matches_long_double(self):
        rng = np.random.default_rng(2)
        levels = ChannelLevels(20, 15, 12, 18)
        h = FineGains.sample(rng)
        x1, x2 = rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50)
        y1, _ = gauss_channel_apply(h, levels, x1, x2, 0.0, 0.0)
        ld = np.longdouble
        ref = ld(2) ** 20 * ld(h.h11) * x1.astype(ld) + ld(2) ** 15 * ld(h.h12) * x2.astype(ld)
        self.assertEqual(y1.dtype, np.longdouble)
        np.testing.assert_array_equal(y1, ref)

    def test_modulation(self):
        hq = FineGains(1.5, 1.5, 1.5, 2.0)
        x1, x2 = modulate_inputs(hq, 0.25, 0.0, 0.0, 0.0)
        self.assertEqual((x1, x2), (0.5, 0.0))
        self.assertEqual(modulate_inputs(hq, 0.0, 0.0, 0.0, 0.0), (0.0, 0.0))

    def test_power_constraint(self):
        with self.assertRaises(PowerConstraintError):
            modulate_inputs(FineGains(1.5, 1.5, 1.5, 1.5), 0.3, 0.0, 0.0, 0.0)


class TestQuantize(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(quantize_gains(FineGains(1.3125, 1.3, 2.0, 1.5), 4).as_tuple(),
                         (1.3125, 1.25, 2.0, 1.5))
        self.assertEqual(quantize_gains(FineGains(1.3, 1.3, 1.3, 1.3), 2).h11, 1.25)

    def test_stays_above_one(self):
        q = quantize_gains(FineGains(1.01, 1.5, 1.5, 1.5), 2)
        self.assertGreater(q.h11, 1.0)

    def test_error_shrinks(self):
        h = FineGains(1.123456789, 1.987654321, 1.5, 1.000001)
        for bits in (8, 16, 30):
            q = quantize_gains(h, bits)
            for a, b in zip(h.as_tuple(), q.as_tuple()):
                self.assertLessEqual(abs(a - b), 2.0 ** -bits)

    def test_random_gains_floor_and_clamp(self):
        rng = np.random.default_rng(17)
        for _ in range(100_000):
            h = FineGains.sample(rng)
            bits = int(rng.integers(1, 31))
            scale = 2.0 ** bits
            for value, q in zip(h.as_tuple(), quantize_gains(h, bits).as_tuple()):
                floored = math.floor(value * scale) / scale
                self.assertEqual(q, floored if floored > 1 else 1 + 1 / scale)
                self.assertTrue(1 < q <= 2)


if __name__ == "__main__":
    unittest.main()
