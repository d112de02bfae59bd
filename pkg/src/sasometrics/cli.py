"""Command line entry point: ``sasometrics run`` and ``sasometrics check``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import RunConfig, run
from .scenarios import SCENARIOS


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sasometrics", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario and write metric CSVs")
    p_run.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--ticks", type=int, default=None)
    p_run.add_argument("--out", type=Path, default=Path("out"))
    p_run.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="metric parameter (stability_M, stability_L, epsilon, usage_L, transfer_L, "
        "bin_count) or scenario setting; repeatable",
    )

    p_check = sub.add_parser("check", help="run the acceptance criteria")
    p_check.add_argument("--seeds", type=int, default=10, help="seeds per scenario criterion")
    p_check.add_argument(
        "--only", action="append", default=[], metavar="N", help="run only these criterion numbers"
    )
    return parser


def _cmd_run(args) -> int:
    config = RunConfig.from_params(args.scenario, args.param, seed=args.seed, ticks=args.ticks, out=args.out)
    result = run(config)
    for line in result.summary_lines():
        print(line)
    return 0


def _cmd_check(args) -> int:
    from .acceptance import run_all

    only = {int(x) for x in args.only} or None
    results = run_all(n_seeds=args.seeds, only=only)
    for r in results:
        print(r.line())
    failures = [r.as_dict() for r in results if not r.passed]
    print(json.dumps({"failures": failures}))
    return 1 if failures else 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_check(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
