import io
import json
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

from src.cli import RunConfig, build_parser, dof_envelope, main
from src.errors import PreconditionError


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    records = [json.loads(line) for line in out.getvalue().splitlines() if line.startswith("{")]
    return code, records, out.getvalue()


class TestRates(unittest.TestCase):
    def test_case_two(self):
        code, records, _ = invoke("rates", "--n", "10,8,4,13")
        self.assertEqual(code, 0)
        self.assertEqual(records[0]["case"], "II")
        self.assertEqual(records[0]["capacity"]["D"], "13")
        self.assertEqual(records[0]["config"]["levels"], [10, 8, 4, 13])

    def test_weak_direct_is_usage_error(self):
        code, records, _ = invoke("rates", "--n", "3,5,5,3")
        self.assertEqual(code, 2)
        self.assertEqual(records, [])

    def test_infeasible_is_violation(self):
        code, records, _ = invoke("rates", "--n", "2,2,2,2")
        self.assertEqual(code, 1)
        self.assertIsNone(records[0]["penalized_allocation"])

    def test_bad_delta(self):
        code, _, _ = invoke("rates", "--n", "10,8,4,13", "--delta", "1.5")
        self.assertEqual(code, 2)


class TestStochastic(unittest.TestCase):
    def test_seed_is_required(self):
        with redirect_stderr(io.StringIO()), self.assertRaises(SystemExit) as ctx:
            main(["outage", "--n", "9,9,9,9"])
        self.assertEqual(ctx.exception.code, 2)

    def test_det_outage(self):
        code, records, _ = invoke("outage", "--n", "9,9,9,9", "--samples", "300", "--seed", "1")
        self.assertEqual(code, 0)
        self.assertEqual(records[0]["samples"], 300)
        self.assertLessEqual(records[0]["wilson_hi"], 0.5)
        self.assertEqual(records[0]["seed"], 1)

    def test_output_is_reproducible(self):
        args = ("det-sim", "--n", "9,9,9,9", "--samples", "200", "--seed", "3")
        self.assertEqual(invoke(*args)[2], invoke(*args)[2])

    def test_groshev_budget(self):
        code, _, _ = invoke("groshev", "--beta", "0.1", "--a1", "1", "--a2", "1", "--q0", "5", "--q1", "5",
                            "--q2", "5", "--samples", "10", "--seed", "1", "--budget", "10")
        self.assertEqual(code, 3)

    def test_dof_table(self):
        code, records, _ = invoke("dof-table", "--n-max", "12", "--seed", "7")
        self.assertEqual(code, 0)
        self.assertEqual([r["n"] for r in records], list(range(6, 13)))
        for r in records:
            self.assertGreaterEqual(r["per_level"], r["envelope"])

    def test_dof_table_csv(self):
        code, _, text = invoke("dof-table", "--n-max", "8", "--seed", "7", "--format", "csv")
        self.assertEqual(code, 0)
        lines = text.splitlines()
        self.assertEqual(lines[0], "n,achieved,per_level,dof,envelope")
        self.assertEqual(len(lines), 4)


class TestMacMap(unittest.TestCase):
    def test_pgm_written(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "mac.pgm")
            code, records, _ = invoke("mac-map", "--n", "5", "--grid", "32", "--out", path)
            self.assertEqual(code, 0)
            with open(path, "rb") as fh:
                self.assertTrue(fh.read().startswith(b"P5\n32 32\n255\n"))
        self.assertEqual(records[0]["grid"], 32)
        self.assertTrue(0 <= records[0]["black_fraction"] <= 1)

    def test_pgm_needs_out(self):
        code, _, _ = invoke("mac-map", "--n", "5", "--grid", "8")
        self.assertEqual(code, 2)


class TestBounds(unittest.TestCase):
    def test_case_two_bounds(self):
        code, records, _ = invoke("bounds", "--n", "10,8,4,13")
        self.assertEqual(code, 0)
        self.assertEqual(records[0]["lp"]["optimum"], "13")
        self.assertEqual(records[0]["sandwich"]["violations"], [])


class TestConfig(unittest.TestCase):
    def test_options_collected(self):
        args = build_parser().parse_args(["gauss-sim", "--n", "20,20,20,20", "--seed", "2", "--mismatched"])
        cfg = RunConfig.from_args(args)
        self.assertEqual(cfg.levels, (20, 20, 20, 20))
        self.assertTrue(cfg.options["mismatched"])
        self.assertNotIn("handler", cfg.options)
        gains = cfg.fine_gains()
        self.assertEqual(gains, RunConfig.from_args(args).fine_gains())

    def test_missing_levels(self):
        with self.assertRaises(PreconditionError):
            RunConfig(command="rates").channel_levels()

    def test_envelope(self):
        self.assertAlmostEqual(dof_envelope(30, 0.5), 4 / 3 - 20 / 30)


if __name__ == "__main__":
    unittest.main()
