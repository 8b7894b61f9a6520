"""Main entry point for the fairlip command-line tool."""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from fairlip import __version__
from fairlip.cli.commands import (
    EXIT_INPUT,
    EXIT_INTERNAL,
    CommandContext,
    cmd_aa,
    cmd_bias,
    cmd_check,
    cmd_em,
    cmd_expmech,
    cmd_solve,
)
from fairlip.errors import InfeasibleParityError, SolverError, ValidationError
from fairlip.i18n import _, init_i18n
from fairlip.infrastructure.json_repository import JsonDocumentRepository
from fairlip.infrastructure.schema import format_value
from fairlip.settings import load_settings

log = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _add_kind(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--kind",
        choices=["tv", "inf"],
        default="tv",
        help="Probability metric: total variation or relative l-infinity (default: tv)",
    )


def _add_groups(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--s", required=True, help="Name of the protected group S")
    parser.add_argument("--t", required=True, help="Name of the group T")


def _add_outputs(parser: argparse.ArgumentParser, report: bool = True) -> None:
    parser.add_argument("--out", type=Path, help="Write the resulting document to this file")
    if report:
        parser.add_argument("--report", type=Path, help="Also write the report as JSON")


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog="fairlip",
        description="Fair classification with Lipschitz mappings: LPs, bias and parity checks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", action="store_true", help="Log debugging information")
    parser.add_argument("--lang", choices=["en", "fr"], help="Language of diagnostics")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="Compute an optimal Lipschitz mapping")
    solve.add_argument("instance", type=Path)
    _add_kind(solve)
    _add_outputs(solve, report=False)
    solve.set_defaults(handler=cmd_solve)

    bias = commands.add_parser("bias", help="Largest parity gap a Lipschitz mapping allows")
    bias.add_argument("instance", type=Path)
    _add_groups(bias)
    _add_kind(bias)
    bias.add_argument("--verify", action="store_true", help="Compare with the Earthmover distance")
    _add_outputs(bias)
    bias.set_defaults(handler=cmd_bias)

    em = commands.add_parser("em", help="Earthmover distance between two groups")
    em.add_argument("instance", type=Path)
    _add_groups(em)
    em.add_argument("--form", choices=["general", "metric"], default="general")
    _add_outputs(em, report=False)
    em.set_defaults(handler=cmd_em)

    aa = commands.add_parser("aa", help="Fair affirmative action between S and T")
    aa.add_argument("instance", type=Path)
    _add_groups(aa)
    aa.add_argument("--epsilon", type=float, required=True, help="Parity slack")
    _add_kind(aa)
    aa.add_argument("--no-reweight", action="store_true", help="Keep the vendor loss on T unchanged")
    _add_outputs(aa)
    aa.set_defaults(handler=cmd_aa)

    expmech = commands.add_parser("expmech", help="Exponential mechanism over the individuals")
    expmech.add_argument("instance", type=Path)
    expmech.add_argument("--scale", type=float, default=1.0, help="Exponent multiplier (default: 1)")
    expmech.add_argument("--radii", type=float, nargs="+", help="Radii for the ball-size profile")
    _add_outputs(expmech)
    expmech.set_defaults(handler=cmd_expmech)

    check = commands.add_parser("check", help="Certify a mapping file against an instance")
    check.add_argument("instance", type=Path)
    check.add_argument("mapping", type=Path)
    _add_kind(check)
    check.add_argument("--report", type=Path, help="Also write the report as JSON")
    check.set_defaults(handler=cmd_check)

    return parser


def _run_command(args: argparse.Namespace, context: CommandContext) -> int:
    """Run a subcommand and map failures to exit codes."""
    try:
        return args.handler(args, context)
    except InfeasibleParityError as e:
        log.error(f"Infeasible parity slack: {e}")
        print(
            _("error-infeasible-parity",
              eps=format_value(e.eps, 6), minimal=format_value(e.minimal_eps, 6)),
            file=sys.stderr,
        )
        return EXIT_INTERNAL
    except (ValidationError, OSError) as e:
        log.error(f"Invalid input: {e}")
        print(_("error-input", detail=str(e)), file=sys.stderr)
        return EXIT_INPUT
    except SolverError as e:
        log.error(f"Solver failure: {e}")
        print(_("error-internal", detail=str(e)), file=sys.stderr)
        return EXIT_INTERNAL


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command-line tool."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format=LOG_FORMAT,
        stream=sys.stderr,
    )
    log.debug(f"Running fairlip {args.command}")

    # Load settings
    settings = load_settings()

    # Initialize i18n
    init_i18n(settings, args.lang)

    context = CommandContext(settings, JsonDocumentRepository(settings.precision))
    return _run_command(args, context)


if __name__ == "__main__":
    sys.exit(main())
