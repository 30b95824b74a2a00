"""Command-line entry point: ``pqci decide|verify|attack|cost|trace``.

Exit status is 0 on success, 1 when a verification or target check fails
and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from pqci.harness.commands import COMMAND_FUNCS, STRATEGIES
from pqci.harness.config import FORMATS, ConfigError, build_config

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--t", type=int, help="precision bits; grid size T = 2^t")
    common.add_argument("--alice", help="Alice's circle as x,y,r")
    common.add_argument("--bob", help="Bob's circle as x,y,r")
    common.add_argument("--seed", type=int, help="base seed (random and recorded if omitted)")
    common.add_argument("--format", choices=FORMATS, help="output format (default text)")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--workers", type=int, help="worker processes for sweeps and trials")
    common.add_argument("--timing", action="store_const", const=True,
                        help="include wall-clock timing in JSON output")

    parser = _Parser(prog="pqci", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("decide", parents=[common], help="one honest protocol run")

    verify = sub.add_parser("verify", parents=[common], help="compare protocol verdicts to D < R")
    verify.add_argument("--pairs", type=int, help="number of random pairs (sampled mode)")
    verify.add_argument("--exhaustive", action="store_const", const=True, help="sweep every valid pair")

    attack = sub.add_parser("attack", parents=[common], help="Monte Carlo attack statistics")
    attack.add_argument("--strategy", choices=STRATEGIES)
    attack.add_argument("--trials", type=int)
    attack.add_argument("--decoys", type=int, help="decoy qubits for eve-intercept / decoys-only")
    attack.add_argument("--alice2", help="second circle for multi-input, x,y,r")
    attack.add_argument("--shots", type=int, help="fresh queries for the superposed attack")

    cost = sub.add_parser("cost", parents=[common], help="cost-model scaling table")
    cost.add_argument("--t-list", dest="t_list", help="comma separated t values (default 4,8,16)")

    sub.add_parser("trace", parents=[common], help="stage-by-stage state dump of one run")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        config = build_config(args.command, flags, args.config)
        report = COMMAND_FUNCS[args.command](config)
    except (ConfigError, OSError) as exc:
        print(f"pqci {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = report.render(config.format)
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
