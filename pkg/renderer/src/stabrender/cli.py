"""Script entry: render --spec spec.json (exit 0 ok, 2 on spec/schema errors)."""

from __future__ import annotations

import argparse
import json
import sys

from .render import SpecError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="render figures from experiment CSVs"
    )
    parser.add_argument("--spec", required=True, help="path to the figure spec JSON")
    args = parser.parse_args(argv)
    try:
        with open(args.spec) as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read spec: {exc}", file=sys.stderr)
        return 2
    try:
        out = render(spec)
    except (SpecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
