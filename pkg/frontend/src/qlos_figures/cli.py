"""qlos-plot: render figure specs against sweep CSV files."""

import argparse
import sys

from .render import render
from .spec import SpecError, load_spec_file
from .tables import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qlos-plot",
        description="Render publication-style figures from qlos sweep "
                    "CSV files.")
    parser.add_argument("--spec", required=True,
                        help="JSON file holding one figure spec or a list")
    parser.add_argument("--out", required=True,
                        help="directory for the rendered images")
    args = parser.parse_args(argv)
    try:
        specs = load_spec_file(args.spec)
        for spec in specs:
            path = render(spec, args.out)
            print(path)
    except (SpecError, SchemaError) as e:
        print(f"figure error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
