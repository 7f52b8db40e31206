"""Command-line interface.

    cptpricing price     --p-star 0.4            [--scenario FILE] [--out DIR] [--format csv|json|svg]
    cptpricing fourfold  [--p-nr 0.95] [--steps 200]
    cptpricing mixed     [--steps 1000]
    cptpricing self-ref  [--steps 500]
    cptpricing check

Exit codes: 0 success, 1 configuration or input error, 2 an experiment
expectation or property check failed, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .checks import CheckReport, run_property_check
from .errors import CptPricingError, NonConvergenceError
from .experiments import (
    ExperimentResult,
    run_fourfold,
    run_mixed_variants,
    run_price,
    run_self_reference,
)
from .pricing import EwtState, HPolicy
from .report_io import FORMATS, _jsonable, emit
from .scenario import Scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK_FAILED = 2
EXIT_NONCONVERGENCE = 3


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError("need at least 2 grid points")
    return v


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors; keep exit code 2 for failed checks."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scenario", type=Path, default=None, help="scenario JSON (default: shipped calibration)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    common.add_argument("--format", choices=FORMATS, default="csv", help="output format (default: csv)")

    parser = _Parser(
        prog="cptpricing",
        description="Price uncertain shared rides for passengers who weigh outcomes as prospects.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND", parser_class=_Parser)

    price = sub.add_parser("price", parents=[common], help="solve the tariff reaching a target acceptance")
    price.add_argument("--p-star", type=float, help="target acceptance in (0, 1)")
    price.add_argument("--ewt-before", type=float, help="average waiting time now [min]")
    price.add_argument("--ewt-after", type=float, help="average waiting time if the request is accepted [min]")
    price.add_argument("--ewt-target", type=float, help="waiting-time target [min]")
    price.add_argument("--policy", default=None, help="target-acceptance policy (logistic, constant)")
    price.add_argument("--gain", type=float, default=None, help="logistic policy slope [1/min]")

    ff = sub.add_parser("fourfold", parents=[common], help="fourfold-pattern experiment")
    ff.add_argument("--p-nr", type=float, default=None, help="probability of the likely non-reference outcome")
    ff.add_argument("--steps", type=_positive_int, default=None)

    mixed = sub.add_parser("mixed", parents=[common], help="mixed-prospect band experiment")
    mixed.add_argument("--steps", type=_positive_int, default=None)

    sr = sub.add_parser("self-ref", parents=[common], help="self-reference experiment")
    sr.add_argument("--steps", type=_positive_int, default=None)

    sub.add_parser("check", parents=[common], help="run invariant checks against the scenario")
    return parser


def _ewt_args(args: argparse.Namespace) -> tuple[EwtState | None, HPolicy | None]:
    given = [args.ewt_before, args.ewt_after, args.ewt_target]
    if all(v is None for v in given):
        ewt = None
    elif any(v is None for v in given):
        raise argparse.ArgumentTypeError("--ewt-before, --ewt-after and --ewt-target go together")
    else:
        ewt = EwtState(*given)
    policy = None
    if args.policy is not None or args.gain is not None:
        defaults = HPolicy()
        policy = HPolicy(args.policy or defaults.kind, defaults.gain if args.gain is None else args.gain)
    return ewt, policy


def _run(args: argparse.Namespace, scenario: Scenario) -> ExperimentResult | CheckReport:
    if args.command == "price":
        ewt, policy = _ewt_args(args)
        return run_price(scenario, args.p_star, ewt, policy)
    if args.command == "fourfold":
        return run_fourfold(scenario, args.p_nr, args.steps)
    if args.command == "mixed":
        return run_mixed_variants(scenario, args.steps)
    if args.command == "self-ref":
        return run_self_reference(scenario, args.steps)
    return run_property_check(scenario)


def _print_summary(result: ExperimentResult | CheckReport) -> None:
    if isinstance(result, CheckReport):
        for o in result.outcomes:
            print(f"{o.status.upper():8s} {o.name}: {o.detail}")
        c = result.counts()
        print(f"{c['pass']} passed, {c['fail']} failed, {c['skipped']} skipped")
        return
    if result.experiment == "price":
        s = result.summary
        print(f"tariff {s['tariff_quoted']} (target acceptance {s['target']:.6f}, achieved {s['acceptance']:.6f})")
        return
    print(json.dumps(_jsonable(result.summary), indent=2, sort_keys=True))
    print("expectations met" if result.passed else "EXPECTATIONS VIOLATED")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        scenario = Scenario.load(args.scenario) if args.scenario else Scenario.calibration()
        result = _run(args, scenario)
        paths = emit(result, args.out, args.format)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (CptPricingError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _print_summary(result)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
