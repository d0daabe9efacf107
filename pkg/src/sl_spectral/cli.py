#!/usr/bin/env python3
"""Command-line entry point for the Sturm-Liouville spectral toolkit.

Usage:
    sl-spectral validate problems/worked_example.json
    sl-spectral spectrum problems/worked_example.json --window=-1:500
    sl-spectral expand problems/worked_example.json --K 1,10,100 --out out/
    sl-spectral converge problems/worked_example.json --K 10,25,50,100
    sl-spectral oracle-compare problems/worked_example.json --grid 4096

JSON goes to stdout, logs and banners to stderr. Exit status: 0 on success,
1 when a validation or check fails, 2 on usage or problem-file errors.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

logger = logging.getLogger("sl_spectral.cli")


def parse_window(text: str) -> tuple[float, float]:
    """Parse 'lo:hi' into a pair of floats."""
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"window must look like lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"window bounds must be numbers, got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"window needs lo < hi, got {text!r}")
    return lo, hi


def parse_k_list(text: str) -> list[int]:
    """Parse '1,10,100' into a list of nonnegative ints."""
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--K must be a comma-separated list of integers, got {text!r}") from None
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError(f"--K needs nonnegative integers, got {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sl-spectral",
        description="Eigenvalues, spectral functions and eigenfunction expansions for Sturm-Liouville problems",
        epilog="Negative windows need the '=' form: --window=-1:120",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="Check coefficients and the boundary pair, classify the case")
    validate.add_argument("file", type=Path)

    spectrum = commands.add_parser("spectrum", help="Eigenvalues and residues in a window")
    spectrum.add_argument("file", type=Path)
    spectrum.add_argument("--window", type=parse_window, default=None, help="lo:hi (default: from the file)")
    spectrum.add_argument("--cache", action="store_true", help="Reuse and store results in the spectrum cache")

    for name, help_text in (
        ("expand", "Fourier coefficients, L2 residuals and a CSV of the partial sum"),
        ("converge", "L2 and sup-norm residual tables with the uniform-convergence verdict"),
    ):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("file", type=Path)
        sub.add_argument("--K", type=parse_k_list, required=True, help="Comma-separated partial-sum sizes")
        if name == "expand":
            sub.add_argument("--out", type=Path, default=None, help="Directory for the CSV and JSON files")

    compare = commands.add_parser("oracle-compare", help="Compare with the finite-element pencil oracle")
    compare.add_argument("file", type=Path)
    compare.add_argument("--grid", type=int, default=4096, help="Number of cells (default: 4096)")
    compare.add_argument("--window", type=parse_window, default=None, help="lo:hi (default: from the file)")
    return parser


async def run_command(args) -> int:
    from sl_spectral.core.problem_file import load_problem_file
    from sl_spectral.core.utils import dump_json, write_text
    from sl_spectral.services import reports

    spec = load_problem_file(args.file)
    match args.command:
        case "validate":
            result = reports.validate(spec)
        case "spectrum":
            result = await reports.spectrum_command(spec, args.window, args.cache)
        case "expand":
            result = await reports.expand_command(spec, args.K)
        case "converge":
            result = await reports.converge_command(spec, args.K)
        case "oracle-compare":
            result = await reports.oracle_command(spec, args.grid, args.window)
        case _:
            raise ValueError(f"unknown command {args.command}")

    text = dump_json(result.payload)
    sys.stdout.write(text)
    if args.command == "expand" and args.out is not None:
        stem = spec.name or args.file.stem
        write_text(args.out / f"{stem}_expansion.json", text)
        csv_path = write_text(args.out / f"{stem}_expansion.csv", result.csv)
        print(f"Wrote {csv_path}", file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_FAILED


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the spectral CLI."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )

    # Import after load_dotenv so .env overrides reach sl_utils.config
    from sl_spectral.core.errors import ExprError, ProblemFileError, SpectralError

    try:
        return asyncio.run(run_command(args))
    except (ProblemFileError, ExprError) as e:
        print(f"❌ Problem file error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SpectralError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED
    except KeyboardInterrupt:
        print("\n👋 Interrupted", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
