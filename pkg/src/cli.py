"""Command-line front end of the X-channel lab."""
import argparse
import dataclasses
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .allocation import (Model, OutageTarget, allocate, allocate_penalized, capacity_approx, check_det_conditions,
                         check_gauss_conditions, classify_case)
from .bounds import (combined_det_sum_bounds, combined_gauss_sum_bounds, det_bounds, gauss_bounds, max_sum_rate,
                     sandwich_check, sandwich_sweep)
from .channel import ChannelLevels, FineGains, effective_gains, quantize_gains
from .constants import (C1, ENUMERATION_BUDGET, EXIT_BUDGET, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, GROSHEV_BUDGET,
                        MIN_DISTANCE_TARGET)
from .errors import BudgetExceededError, InfeasibleAllocationError, PreconditionError, XChannelError
from .links.det_link import DetLink
from .links.gauss_link import (build_constellation, chernoff_error_bound, conditional_entropy_bound, mc_symbol_error,
                               min_distance, mismatch_report, union_bound_ser)
from .outage import (GroshevParams, groshev_bound, mac_axis, mac_black_fraction, mac_outage_map, mac_strip_count,
                     mc_groshev_measure, mc_outage_det, mc_outage_gauss)
from .render import write_csv, write_map_csv, write_pgm, write_png, write_records
from .stats import OutageEstimate, child_rng

logger = logging.getLogger(__name__)

STOCHASTIC = ("det-sim", "gauss-sim", "outage", "groshev", "dof-table")
CONFIG_FIELDS = ("levels", "gains", "delta", "model", "samples", "seed", "grid", "budget", "out", "fmt")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to replay one invocation."""

    command: str
    levels: Optional[Tuple[int, int, int, int]] = None
    gains: Optional[Tuple[float, float, float, float]] = None
    delta: Optional[float] = None
    model: Optional[str] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    grid: Optional[int] = None
    budget: Optional[int] = None
    out: Optional[str] = None
    fmt: str = "json"
    options: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        values = vars(args)
        known = {name: values[name] for name in CONFIG_FIELDS if values.get(name) is not None}
        options = {k: v for k, v in sorted(values.items())
                   if k not in CONFIG_FIELDS and k not in ("command", "handler", "verbose") and v is not None}
        return cls(command=args.command, options=options, **known)

    def validate(self):
        if self.delta is not None:
            OutageTarget(self.delta)
        if self.samples is not None and self.samples < 0:
            raise PreconditionError("samples must be nonnegative")
        if self.grid is not None and self.grid < 1:
            raise PreconditionError("grid must be >= 1")
        if self.budget is not None and self.budget < 1:
            raise PreconditionError("budget must be >= 1")
        if self.command in STOCHASTIC and self.seed is None:
            raise PreconditionError(f"{self.command} needs --seed")
        if self.fmt in ("pgm", "png") and not self.out:
            raise PreconditionError(f"--format {self.fmt} needs --out")

    def channel_levels(self) -> ChannelLevels:
        if self.levels is None:
            raise PreconditionError(f"{self.command} needs --n")
        return ChannelLevels(*self.levels)

    def fine_gains(self) -> FineGains:
        """The given gains, or a draw from the seed's root stream."""
        if self.gains is not None:
            return FineGains(*self.gains)
        if self.seed is None:
            raise PreconditionError(f"{self.command} needs --h or --seed")
        return FineGains.sample(child_rng(self.seed))

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass
class Outcome:
    records: List[dict] = field(default_factory=list)
    code: int = EXIT_OK


def _levels_arg(text: str) -> Tuple[int, int, int, int]:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected n11,n12,n21,n22 integers, got {text!r}") from None
    if len(values) != 4:
        raise argparse.ArgumentTypeError(f"expected four exponents, got {len(values)}")
    return values


def _gains_arg(text: str) -> Tuple[float, float, float, float]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected h11,h12,h21,h22 numbers, got {text!r}") from None
    if len(values) != 4:
        raise argparse.ArgumentTypeError(f"expected four gains, got {len(values)}")
    return values


def _exceeds(estimate: OutageEstimate, delta: float) -> bool:
    """A violation is only reported when the whole Wilson interval lies above ``delta``."""
    return estimate.wilson95[0] > delta


def cmd_rates(cfg: RunConfig) -> Outcome:
    levels = cfg.channel_levels()
    model = Model(cfg.model or "det")
    ideal = allocate(levels)
    checker = check_det_conditions if model is Model.DET else check_gauss_conditions
    result = {
        "case": classify_case(levels).value,
        "allocation": ideal.as_dict(),
        "capacity": capacity_approx(levels).as_dict(),
        "conditions": checker(ideal, levels, cfg.delta).as_dict(),
    }
    try:
        result["penalized_allocation"] = allocate_penalized(levels, cfg.delta, model).as_dict()
    except InfeasibleAllocationError as exc:
        result["penalized_allocation"] = None
        result["error"] = str(exc)
        return Outcome([result], EXIT_VIOLATION)
    return Outcome([result])


def cmd_det_sim(cfg: RunConfig) -> Outcome:
    levels = cfg.channel_levels()
    a = allocate_penalized(levels, cfg.delta, Model.DET)
    estimate = DetLink(levels, a).simulate(cfg.samples, cfg.seed)
    return Outcome([estimate.as_record()], EXIT_VIOLATION if _exceeds(estimate, cfg.delta) else EXIT_OK)


def cmd_gauss_sim(cfg: RunConfig) -> Outcome:
    levels = cfg.channel_levels()
    h = cfg.fine_gains()
    a = allocate_penalized(levels, cfg.delta, Model.GAUSS)
    mismatched = bool(cfg.options.get("mismatched"))
    estimate = mc_symbol_error(h, levels, a, cfg.samples, cfg.seed, mismatched, cfg.budget)
    record = estimate.as_record()
    record["allocation"] = a.as_dict()
    if cfg.options.get("union_bound"):
        record["union_bound"] = union_bound_ser(h, build_constellation(a, levels))
    return Outcome([record])


def cmd_mindist(cfg: RunConfig) -> Outcome:
    levels = cfg.channel_levels()
    h = cfg.fine_gains()
    a = allocate_penalized(levels, cfg.delta, Model.GAUSS)
    c = build_constellation(a, levels)
    g = effective_gains(h)
    h_hat = quantize_gains(h, levels.max_level)
    records = []
    for rx in (1, 2):
        report = min_distance(g.receiver(rx), c, rx, cfg.budget)
        record = {"rx": rx, "gains": list(h.as_tuple()), "allocation": a.as_dict(), **report.as_dict(),
                  "mismatch": mismatch_report(h, h_hat, c, rx, cfg.budget).as_dict()}
        if report.d > 14 and math.isfinite(report.d):
            record["chernoff_bound"] = chernoff_error_bound(report.d)
            record["entropy_bound"] = conditional_entropy_bound(report.d)
        records.append(record)
    return Outcome(records)


def cmd_outage(cfg: RunConfig) -> Outcome:
    levels = cfg.channel_levels()
    model = Model(cfg.model or "det")
    a = allocate_penalized(levels, cfg.delta, model)
    if model is Model.DET:
        estimate = mc_outage_det(levels, a, cfg.samples, cfg.seed)
    else:
        estimate = mc_outage_gauss(levels, a, cfg.samples, cfg.seed, MIN_DISTANCE_TARGET, cfg.budget)
    return Outcome([estimate.as_record()], EXIT_VIOLATION if _exceeds(estimate, cfg.delta) else EXIT_OK)


def cmd_groshev(cfg: RunConfig) -> Outcome:
    o = cfg.options
    p = GroshevParams(o["beta"], o["a1"], o["a2"], o["q0"], o["q1"], o["q2"])
    bound = groshev_bound(p)
    estimate = mc_groshev_measure(p, cfg.samples, cfg.seed, cfg.budget or GROSHEV_BUDGET, bool(o.get("only_q0")))
    record = estimate.as_record()
    record.update({"bound": bound, "measure": estimate.measure})
    excess = estimate.measure > bound + 3 * estimate.sigma * estimate.volume
    return Outcome([record], EXIT_VIOLATION if excess else EXIT_OK)


def cmd_mac_map(cfg: RunConfig) -> Outcome:
    n = cfg.options["n_mac"]
    grid = cfg.grid or 512
    outage = mac_outage_map(n, grid)
    if cfg.fmt == "pgm":
        write_pgm(cfg.out, outage)
    elif cfg.fmt == "png":
        write_png(cfg.out, outage)
    elif cfg.fmt == "csv":
        axis = mac_axis(grid)
        if cfg.out:
            with open(cfg.out, "w", newline="") as fh:
                write_map_csv(fh, axis, axis, outage)
        else:
            write_map_csv(sys.stdout, axis, axis, outage)
            return Outcome([])
    return Outcome([{"n": n, "grid": grid, "black_fraction": mac_black_fraction(outage),
                     "strip_count": mac_strip_count(n)}])


def cmd_bounds(cfg: RunConfig) -> Outcome:
    sweep = cfg.options.get("sweep")
    if sweep is not None:
        problems = sandwich_sweep(sweep)
        return Outcome([{"max_level": sweep, "violations": problems}],
                       EXIT_VIOLATION if problems else EXIT_OK)

    levels = cfg.channel_levels()
    bounds = det_bounds(levels)
    lp = max_sum_rate(bounds)
    record = {"levels": levels.as_dict(), "det_bounds": bounds.as_dict(), "lp": lp.as_dict(),
              "combined_det": [str(v) for v in combined_det_sum_bounds(levels)]}
    if cfg.gains is not None:
        h = cfg.fine_gains()
        gb = gauss_bounds(levels, h)
        record.update({"gauss_bounds": gb.as_dict(), "gauss_lp": max_sum_rate(gb).optimum,
                       "combined_gauss": list(combined_gauss_sum_bounds(levels, h))})
    code = EXIT_OK
    if levels.strong_direct:
        report = sandwich_check(levels, cfg.samples or 0, cfg.seed or 0)
        record["sandwich"] = report.as_dict()
        if report.violations:
            code = EXIT_VIOLATION
    return Outcome([record], code)


def dof_envelope(n: int, delta: float) -> float:
    """Per-level rate the penalized symmetric allocation always reaches."""
    return 4 / 3 - (2 * math.log2(C1 / delta) + 4) / n


def cmd_dof_table(cfg: RunConfig) -> Outcome:
    n_min = cfg.options.get("n_min", 6)
    n_max = cfg.options["n_max"]
    rows, code = [], EXIT_OK
    for n in range(n_min, n_max + 1):
        levels = ChannelLevels.symmetric(n)
        a = allocate_penalized(levels, cfg.delta, Model.DET)
        achieved = a.sum_rate()
        row = {"n": n, "achieved": achieved, "per_level": achieved / n, "dof": 4 / 3,
               "envelope": dof_envelope(n, cfg.delta)}
        if cfg.samples:
            estimate = mc_outage_det(levels, a, cfg.samples, cfg.seed)
            row["outage"] = estimate.estimate
            row["wilson_hi"] = estimate.wilson95[1]
            if _exceeds(estimate, cfg.delta):
                code = EXIT_VIOLATION
        if row["per_level"] < row["envelope"]:
            code = EXIT_VIOLATION
        rows.append(row)
    if cfg.fmt == "csv":
        header = list(rows[0]) if rows else ["n"]
        write_csv(sys.stdout, header, ([row[k] for k in header] for row in rows))
        return Outcome([], code)
    return Outcome(rows, code)


def _common(p: argparse.ArgumentParser, levels: bool = True, seed: bool = False, delta: bool = True):
    if levels:
        p.add_argument("--n", dest="levels", type=_levels_arg, required=True, help="n11,n12,n21,n22")
    if delta:
        p.add_argument("--delta", type=float, default=0.5, help="allowed outage measure")
    p.add_argument("--seed", type=int, required=seed)
    p.add_argument("--out")
    p.add_argument("--verbose", "-v", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xchannel", description="Two-user X-channel interference alignment lab.")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler: Callable[[RunConfig], Outcome], **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(handler=handler)
        return p

    p = command("rates", cmd_rates, help="allocation, D(N) and decoding conditions")
    _common(p)
    p.add_argument("--model", choices=[m.value for m in Model], default="det")

    p = command("det-sim", cmd_det_sim, help="message round trips over random deterministic gains")
    _common(p, seed=True)
    p.add_argument("--samples", type=int, default=1000)

    p = command("gauss-sim", cmd_gauss_sim, help="symbol error rate over fixed fine gains")
    _common(p, seed=True)
    p.add_argument("--h", dest="gains", type=_gains_arg, help="h11,h12,h21,h22 in (1,2]")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--budget", type=int, default=ENUMERATION_BUDGET)
    p.add_argument("--mismatched", action="store_true", help="transmit and demodulate with quantized gains")
    p.add_argument("--union-bound", action="store_true")

    p = command("mindist", cmd_mindist, help="minimum constellation distance per receiver")
    _common(p)
    p.add_argument("--h", dest="gains", type=_gains_arg)
    p.add_argument("--budget", type=int, default=ENUMERATION_BUDGET)

    p = command("outage", cmd_outage, help="Monte Carlo outage of the penalized allocation")
    _common(p, seed=True)
    p.add_argument("--model", choices=[m.value for m in Model], default="det")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--budget", type=int, default=ENUMERATION_BUDGET)

    p = command("groshev", cmd_groshev, help="analytic and Monte Carlo measure of small integer relations")
    _common(p, levels=False, seed=True, delta=False)
    p.add_argument("--beta", type=float, required=True)
    for name in ("a1", "a2", "q0", "q1", "q2"):
        p.add_argument(f"--{name}", type=int, required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--budget", type=int, default=GROSHEV_BUDGET)
    p.add_argument("--only-q0", action="store_true")

    p = command("mac-map", cmd_mac_map, help="outage map of the two-user multiple access example")
    _common(p, levels=False, delta=False)
    p.add_argument("--n", dest="n_mac", type=int, required=True)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--format", dest="fmt", choices=("pgm", "png", "csv"), default="pgm")

    p = command("bounds", cmd_bounds, help="upper bounds, LP optimum and the D(N) sandwich")
    p.add_argument("--n", dest="levels", type=_levels_arg)
    p.add_argument("--h", dest="gains", type=_gains_arg)
    p.add_argument("--samples", type=int, default=0, help="random fine gains for the gaussian sandwich")
    p.add_argument("--sweep", type=int, help="check every strong-direct N up to this level")
    p.add_argument("--seed", type=int)
    p.add_argument("--verbose", "-v", action="store_true")

    p = command("dof-table", cmd_dof_table, help="symmetric achieved rate per level against 4/3")
    _common(p, levels=False, seed=True)
    p.add_argument("--n-min", type=int, default=6)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    return parser


def run(cfg: RunConfig, handler: Callable[[RunConfig], Outcome]) -> int:
    try:
        cfg.validate()
        outcome = handler(cfg)
    except BudgetExceededError as exc:
        logger.error("%s", exc)
        return EXIT_BUDGET
    except PreconditionError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except XChannelError as exc:
        logger.error("%s", exc)
        return EXIT_VIOLATION
    config = cfg.as_dict()
    write_records(sys.stdout, ({**record, "config": config} for record in outcome.records))
    return outcome.code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    return run(RunConfig.from_args(args), args.handler)
