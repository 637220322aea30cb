"""Command line entry point: ``hpdg --config study.cfg``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

from .config import ConfigError, _levels, parse_config
from .study import SolverFailure, format_header, format_rates, run_study
from .verify import run_checks

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hpdg", description="hp interior penalty DG convergence study for linear elasticity")
    p.add_argument("--config", required=True, metavar="PATH", help="study config file (key = value lines)")
    p.add_argument("--method", choices=("sipg", "iipg", "nipg"))
    p.add_argument("--degree", type=int, help="polynomial degree r")
    p.add_argument("--levels", help="comma separated refinement levels")
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--superpenalty-d", dest="superpenalty_d", type=int)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--verify", action="store_true", help="run the property checks instead of a study")
    p.add_argument("--quiet", action="store_true")
    return p


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        overrides = {k: getattr(args, k) for k in ("method", "degree", "beta", "gamma", "superpenalty_d", "out_dir")
                     if getattr(args, k) is not None}
        if args.levels is not None:
            try:
                overrides["levels"] = _levels(args.levels)
            except ValueError as exc:
                raise ConfigError(str(exc), key="levels") from None
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"hpdg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for w in caught:
        print(f"hpdg: warning: {w.message}", file=sys.stderr)

    say = (lambda *a: None) if args.quiet else print
    logging.basicConfig(level=logging.WARNING)

    if args.verify:
        results = run_checks(cfg)
        for r in results:
            say(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
        failed = sum(not r.passed for r in results)
        say(f"{len(results) - failed}/{len(results)} checks passed")
        return EXIT_OK if not failed else EXIT_VERIFY

    say(f"{cfg.method} r={cfg.degree} d={cfg.superpenalty_d} beta={cfg.beta:g} gamma={cfg.gamma:g} case={cfg.case}")
    say(format_header())
    try:
        result = run_study(cfg, echo=say)
    except SolverFailure as exc:
        print(f"hpdg: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"hpdg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    say(format_rates(result.table))
    say(f"wrote {result.csv_path}")
    return EXIT_OK


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
