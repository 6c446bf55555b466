"""End-to-end checks of the published guarantees at desk scale.

These run longer than the module tests; every random draw comes from a fixed seed.
"""
import itertools
import math
import unittest

import numpy as np

from src.allocation import (Model, RATE_NAMES, RateAllocation, allocate, allocate_penalized, check_det_conditions,
                            check_gauss_conditions, penalty_cap)
from src.bounds import sandwich_sweep
from src.channel import ChannelLevels, DetChannelGains, FineGains, det_channel_apply, effective_gains, quantize_gains
from src.cli import dof_envelope
from src.errors import AlignmentFailure, InfeasibleAllocationError
from src.links.det_link import DetMessages, decodable, decode_receiver, pack_inputs
from src.links.gauss_link import (build_constellation, chernoff_error_bound, empirical_cond_entropy,
                                  mc_symbol_error, min_distance, mismatch_report, union_bound_ser)
from src.outage import (GroshevParams, groshev_bound, mac_axis, mac_black_fraction, mac_outage_map, mac_pair_check,
                        mc_groshev_measure, mc_outage_det, mc_outage_gauss)
from src.stats import child_rng
from tests.test_allocation import strong_direct_levels
from tests.test_gauss_link import WIDE, random_instance

WIDE_ALLOCATION = RateAllocation(r11p=1, r22p=1)
WIDE_GAINS = FineGains(1.2, 1.7, 1.4, 1.3)


def slot_order(a):
    return (a.r11p, a.r22p, a.r11c, a.r22c, a.r12, a.r21)


def small_allocation(levels, rng, max_bits=8):
    """Random sub-allocation of the ideal one carrying at most ``max_bits`` bits."""
    ideal = allocate(levels)
    left, rates = max_bits, {}
    for name in (RATE_NAMES[i] for i in rng.permutation(len(RATE_NAMES))):
        rates[name] = int(rng.integers(0, min(getattr(ideal, name), left) + 1))
        left -= rates[name]
    return RateAllocation(**rates)


class TestWorkedAllocations(unittest.TestCase):
    def test_worked_examples(self):
        expected = {
            (10, 8, 4, 13): (6, 5, 0, 2, 0, 0),
            (11, 8, 9, 13): (2, 5, 3, 4, 2, 1),
            (18, 16, 16, 26): (2, 10, 3, 10, 3, 3),
            (12, 12, 9, 13): (3, 1, 2, 5, 2, 5),
        }
        for levels, rates in expected.items():
            self.assertEqual(slot_order(allocate(ChannelLevels(*levels))), rates, levels)


class TestSandwich(unittest.TestCase):
    def test_every_strong_direct_tuple_up_to_twenty(self):
        self.assertEqual(sandwich_sweep(20), [])


class TestDeterministicGuarantees(unittest.TestCase):
    def test_symmetric_outage(self):
        levels = ChannelLevels.symmetric(9)
        a = allocate_penalized(levels, 0.5)
        estimate = mc_outage_det(levels, a, 10000, seed=2024)
        self.assertLessEqual(estimate.wilson95[1], 0.5)

    def test_penalized_loss_within_cap_up_to_twenty_five(self):
        checked = 0
        for levels in strong_direct_levels(25):
            try:
                a = allocate_penalized(levels, 0.5)
            except InfeasibleAllocationError:
                self.assertFalse(check_det_conditions(RateAllocation(), levels, 0.5).passed, levels)
                continue
            self.assertTrue(check_det_conditions(a, levels, 0.5).passed, levels)
            self.assertLessEqual(allocate(levels).sum_rate() - a.sum_rate(), penalty_cap(0.5), levels)
            checked += 1
        self.assertGreater(checked, 10000)

    def test_decoder_matches_exhaustive_preimages(self):
        rng = np.random.default_rng(5)
        checked = 0
        for instance in range(1000):
            n11, n22 = (int(v) for v in rng.integers(2, 9, 2))
            top = min(n11, n22)
            levels = ChannelLevels(n11, int(rng.integers(0, top + 1)), int(rng.integers(0, top + 1)), n22)
            a = small_allocation(levels, rng)
            g = DetChannelGains.sample(child_rng(5, instance))
            if not decodable(g, a, levels):
                with self.assertRaises(AlignmentFailure):
                    for rx in (1, 2):
                        decode_receiver(det_channel_apply(g, pack_inputs(DetMessages(), a, levels), levels)[rx - 1],
                                        g.receiver(rx), a, levels, rx)
                continue
            preimages = {1: {}, 2: {}}
            ranges = [range(1 << getattr(a, name)) for name in RATE_NAMES]
            for values in itertools.product(*ranges):
                msgs = DetMessages(**dict(zip(RATE_NAMES, values)))
                for rx, y in zip((1, 2), det_channel_apply(g, pack_inputs(msgs, a, levels), levels)):
                    preimages[rx].setdefault(y, set()).add(tuple(sorted(msgs.part(rx).items())))
            for rx in (1, 2):
                for y, parts in preimages[rx].items():
                    self.assertEqual(len(parts), 1, (levels, a, rx))
                    decoded = decode_receiver(y, g.receiver(rx), a, levels, rx)
                    self.assertEqual(tuple(sorted(decoded.items())), next(iter(parts)))
            checked += 1
        self.assertGreater(checked, 100)

    def test_dof_envelope(self):
        for n in range(6, 31):
            a = allocate_penalized(ChannelLevels.symmetric(n), 0.5, Model.DET)
            self.assertGreaterEqual(a.sum_rate() / n, dof_envelope(n, 0.5), n)


class TestGaussianGuarantees(unittest.TestCase):
    def test_min_distance_outage(self):
        levels = ChannelLevels.symmetric(28)
        a = RateAllocation(r11c=2, r12=2, r21=2, r22c=2)
        self.assertTrue(check_gauss_conditions(a, levels, 0.5).passed)
        estimate = mc_outage_gauss(levels, a, 2000, seed=11)
        self.assertLessEqual(estimate.wilson95[1], 0.5)

    def test_mismatch_bounds(self):
        rng = np.random.default_rng(77)
        for _ in range(1000):
            levels, a = random_instance(rng)
            c = build_constellation(a, levels)
            h = FineGains.sample(rng)
            h_hat = quantize_gains(h, levels.max_level)
            for rx in (1, 2):
                report = mismatch_report(h, h_hat, c, rx)
                self.assertLessEqual(report.d_hat, 2.0 + 1e-12)
                if math.isfinite(report.d):
                    self.assertGreaterEqual(report.d_prime, report.d - 8 - 1e-9)

    def test_wide_constellation_has_no_errors(self):
        c = build_constellation(WIDE_ALLOCATION, WIDE)
        g = effective_gains(WIDE_GAINS)
        for rx in (1, 2):
            self.assertGreaterEqual(min_distance(g.receiver(rx), c, rx).d, 32)
        self.assertLess(chernoff_error_bound(32), 1e-16)
        estimate = mc_symbol_error(WIDE_GAINS, WIDE, WIDE_ALLOCATION, 10 ** 6, seed=8)
        self.assertEqual(estimate.failures, 0)

    def test_close_constellation_within_union_bound(self):
        tiny = ChannelLevels(3, 0, 0, 3)
        a = RateAllocation(r11c=1)
        h = FineGains(1.5, 1.3, 1.6, 1.4)
        bound = union_bound_ser(h, build_constellation(a, tiny))
        estimate = mc_symbol_error(h, tiny, a, 100000, seed=9)
        self.assertLessEqual(estimate.estimate, bound + 3 * estimate.sigma)

    def test_conditional_entropy(self):
        value = empirical_cond_entropy(WIDE_GAINS, WIDE, WIDE_ALLOCATION, 10 ** 6, seed=10)
        self.assertLessEqual(value, 1.5)


class TestGroshev(unittest.TestCase):
    def test_unit_parameters(self):
        self.assertEqual(groshev_bound(GroshevParams(1.0, 1, 1, 1, 1, 1)), 3024)

    def test_measure_below_bound(self):
        grid = [GroshevParams(beta, a1, a2, q0, q1, q2)
                for beta in (1e-4, 3e-4, 1e-3, 2e-3)
                for a1, a2, q0, q1, q2 in itertools.product((1, 2), repeat=5)]
        grid = [p for p in grid if groshev_bound(p) < 27]
        self.assertGreaterEqual(len(grid), 50)
        for index, p in enumerate(grid):
            estimate = mc_groshev_measure(p, 2000, seed=index)
            self.assertLessEqual(estimate.measure, groshev_bound(p) + 3 * estimate.sigma * estimate.volume, p)


class TestMacMap(unittest.TestCase):
    def test_every_cell_reverified(self):
        grid, n = 512, 7
        outage = mac_outage_map(n, grid)
        axis = mac_axis(grid)
        for i, h1 in enumerate(axis):
            for j, h2 in enumerate(axis):
                black, witness, best = mac_pair_check(float(h1), float(h2), n)
                if outage[i, j]:
                    self.assertTrue(black)
                    self.assertIsNotNone(witness)
                else:
                    self.assertGreater(best, 2)

    def test_black_area_decreases(self):
        fractions = [mac_black_fraction(mac_outage_map(n, 512)) for n in range(5, 10)]
        for a, b in zip(fractions, fractions[1:]):
            self.assertLess(b, a)


if __name__ == "__main__":
    unittest.main()
