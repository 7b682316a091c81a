import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from rld_chaos.commands import cmd_compare_exponential, cmd_lyapunov, cmd_simulate, cmd_sweep
from rld_chaos.config import OutputFormat, OutputSettings, RunConfig, load_config
from rld_chaos.errors import RldError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_OUTPUT = 3

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


class ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors by raising, so they share the invalid-input exit code."""

    def error(self, message: str):
        raise argparse.ArgumentTypeError(f"{self.prog}: {message}")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="rld-chaos",
        description="Simulate and analyse the sinusoidally driven resistor-inductor-diode circuit.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="configuration file; defaults apply when omitted")
    common.add_argument("--out", type=Path, help="output directory, overrides [output] directory")
    common.add_argument(
        "--svg", action=argparse.BooleanOptionalAction, default=None, help="write SVG figures"
    )
    common.add_argument("-v", "--verbose", action="store_true", help="log debug messages")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("simulate", parents=[common], help="integrate one run and write the time series")

    sweep = commands.add_parser("sweep", parents=[common], help="bifurcation sweep over drive amplitude")
    sweep.add_argument("--e-min", type=float, help="lowest amplitude in V")
    sweep.add_argument("--e-max", type=float, help="highest amplitude in V")
    sweep.add_argument("--steps", type=int, help="number of amplitudes")
    sweep.add_argument("--jobs", type=int, default=1, help="amplitudes integrated concurrently")

    lyapunov = commands.add_parser("lyapunov", parents=[common], help="largest Lyapunov exponent")
    lyapunov.add_argument("--input", type=Path, help="CSV with one value column instead of a simulation")

    commands.add_parser(
        "compare-exponential", parents=[common], help="contrast with the exponential diode model"
    )
    return parser


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    output = cfg.output.model_dump()
    if args.out is not None:
        output["directory"] = args.out
    if args.svg is not None:
        formats = set(cfg.output.formats)
        formats = formats | {OutputFormat.SVG} if args.svg else formats - {OutputFormat.SVG}
        output["formats"] = frozenset(formats)
    return cfg.model_copy(update={"output": OutputSettings.model_validate(output)})


def run(args: argparse.Namespace) -> list[Path]:
    cfg = load_config(args.config) if args.config is not None else RunConfig()
    cfg = apply_overrides(cfg, args)
    if args.command == "simulate":
        return cmd_simulate(cfg)
    if args.command == "sweep":
        if args.jobs < 1:
            raise argparse.ArgumentTypeError(f"--jobs must be at least 1, got {args.jobs}")
        return cmd_sweep(cfg, args.e_min, args.e_max, args.steps, jobs=args.jobs)
    if args.command == "lyapunov":
        return cmd_lyapunov(cfg, args.input)
    return cmd_compare_exponential(cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except argparse.ArgumentTypeError as e:
        logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr)
        logger.error(str(e))
        return EXIT_INVALID
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format=LOG_FORMAT,
        stream=sys.stderr,
    )
    try:
        written = run(args)
    except RldError as e:
        logger.error(str(e))
        return e.exit_code
    except (ValidationError, argparse.ArgumentTypeError) as e:
        logger.error(str(e))
        return EXIT_INVALID
    except OSError as e:
        logger.error(str(e))
        return EXIT_OUTPUT
    for path in written:
        logger.info(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
