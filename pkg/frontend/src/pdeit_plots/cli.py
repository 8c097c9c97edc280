"""Batch figure renderer: render --spec figure.json [--spec other.json ...]"""
from __future__ import annotations

import argparse
import sys

from .render import RenderError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render pdeit output files into figures"
    )
    parser.add_argument(
        "--spec", action="append", required=True,
        help="figure spec JSON (repeatable)",
    )
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        for spec in args.spec:
            meta = render(spec)
            print(meta["output"])
    except (RenderError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
