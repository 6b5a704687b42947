import argparse
import logging
import sys
from typing import List, Optional

import numpy as np
from dotenv import load_dotenv

from simoid import __version__
from simoid.commands.bound import cmd_bound, cmd_montecarlo, cmd_sweep
from simoid.commands.check import cmd_check
from simoid.commands.recover import cmd_recover
from simoid.config import get_settings, load_experiment_config
from simoid.errors import CommandError, SimoidError
from simoid.schemas import ExperimentConfig

logger = logging.getLogger(__name__)

PRECEDENCE = """\
Parameter precedence: built-in defaults < --config file (flat 'key = value'
lines) < command-line flags. Exit codes for 'check': 0 identifiable,
2 boundary, 3 not identifiable, 1 error. Every command is deterministic given
--seed; without it a seed is drawn from entropy and printed on stderr.
"""

# flag destination -> ExperimentConfig field
CONFIG_FIELDS = ["M", "L", "Lp", "p", "sigma2", "n", "samples", "trials", "seed",
                 "delta", "M_list", "L_list", "workers", "out"]


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1 so that 2 and 3 stay reserved for verdicts"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser, channel: bool) -> None:
    parser.add_argument("--config", help="Flat key = value experiment file")
    parser.add_argument("--seed", type=int, help="Master random seed")
    parser.add_argument("--p", type=float, help="Sparsity exponent in (0, 1]")
    parser.add_argument("--out", help="Output path (CSV for bound/montecarlo/sweep)")
    parser.add_argument("--log-level", help="Logging level (default from SIMOID_LOG_LEVEL)")
    if channel:
        parser.add_argument("--channel", help="Channel JSON document")
        parser.add_argument("--random", nargs=2, type=int, metavar=("M", "L"),
                            help="Draw a Gaussian channel with M antennas and order L")
        parser.add_argument("--Lp", type=int, help="Assumed channel order L' (default L+1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="simoid",
        description="Identifiability analysis of blind SIMO subspace channel estimation under l1/lp sparsity",
        epilog=PRECEDENCE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="Evaluate the identifiability condition", epilog=PRECEDENCE)
    _add_common(check, channel=True)

    recover = sub.add_parser("recover", help="Recover the channel by sparse selection", epilog=PRECEDENCE)
    _add_common(recover, channel=True)
    recover.add_argument("--pipeline", action="store_true",
                         help="Run covariance -> projector -> kernel -> selection")
    recover.add_argument("--n", type=int, help="Stacking depth (default L')")
    recover.add_argument("--sigma2", type=float, help="Noise variance")
    recover.add_argument("--samples", type=int, help="Sample count (exact covariance when absent)")

    for name, text in (("bound", "Evaluate the delta=1 lower bound (p = 1 only)"),
                       ("montecarlo", "Monte Carlo frequency of the condition")):
        grid = sub.add_parser(name, help=text, epilog=PRECEDENCE)
        _add_common(grid, channel=False)
        grid.add_argument("M", type=int, nargs="?", help="Antenna count")
        grid.add_argument("L", type=int, nargs="?", help="Channel order")
        if name == "montecarlo":
            grid.add_argument("--trials", type=int, help="Number of trials")
            grid.add_argument("--delta", type=int, help="Over-modeling L'-L (default 1)")
            grid.add_argument("--workers", type=int, help="Process pool width")

    sweep = sub.add_parser("sweep", help="Bound and Monte Carlo over an (M, L) grid", epilog=PRECEDENCE)
    _add_common(sweep, channel=False)
    sweep.add_argument("--M-list", dest="M_list", help="Comma-separated antenna counts")
    sweep.add_argument("--L-list", dest="L_list", help="Comma-separated channel orders")
    sweep.add_argument("--trials", type=int, help="Trials per grid point")
    sweep.add_argument("--delta", type=int, help="Over-modeling L'-L (default 1)")
    sweep.add_argument("--workers", type=int, help="Process pool width")
    return parser


def _configure_logging(level: Optional[str]) -> None:
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge config file and flags, then fix the seed so the run is reproducible"""
    overrides = {name: getattr(args, name, None) for name in CONFIG_FIELDS}
    if args.config:
        config = load_experiment_config(args.config, overrides)
    else:
        config = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})

    if config.seed is None:
        seed = get_settings().default_seed
        if seed is None:
            seed = int(np.random.SeedSequence().entropy % (2 ** 63))
        config = config.model_copy(update={"seed": seed})
        print(f"seed: {seed}", file=sys.stderr)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    # Load environment variables from .env file
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    _configure_logging(args.log_level)

    try:
        config = resolve_config(args)
        workers = config.workers or get_settings().workers

        if args.command == "check":
            code, report = cmd_check(config, args.channel, args.random)
            print(report.model_dump_json(indent=2))
            return code
        if args.command == "recover":
            document = cmd_recover(config, args.channel, args.random, args.pipeline)
            print(document.model_dump_json(indent=2))
            return 0
        if args.command == "bound":
            lines = cmd_bound(config)
        elif args.command == "montecarlo":
            lines = cmd_montecarlo(config, workers)
        else:
            lines = cmd_sweep(config, workers)
        for line in lines:
            print(line)
        return 0
    except CommandError as e:
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except SimoidError as e:
        print(f"error: {e.detail}", file=sys.stderr)
        return 1
    except ValueError as e:
        # pydantic validation of flags
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
