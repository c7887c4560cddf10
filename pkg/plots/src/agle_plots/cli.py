"""Command-line wrapper around the figure builders.

Exit codes follow the solver CLI's taxonomy: 0 ok, 2 invalid-argument,
3 io-error, 4 format-error.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureRequest, FormatError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agle-plots",
        description="Render figures from solver CLI output CSVs.",
    )
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--input", required=True, help="input CSV path")
    parser.add_argument("--output", required=True, help="output image path")
    parser.add_argument("--title", default="")
    parser.add_argument("--xlabel", default="")
    parser.add_argument("--ylabel", default="")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = render(
            FigureRequest(
                kind=args.kind,
                input_csv=args.input,
                output_image=args.output,
                title=args.title,
                xlabel=args.xlabel,
                ylabel=args.ylabel,
            )
        )
    except FormatError as err:
        print(f"error: format-error: {err}", file=sys.stderr)
        return 4
    except OSError as err:
        print(f"error: io-error: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"error: invalid-argument: {err}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
