"""Convert a directory of tracebase appliance traces into a device-per-row CSV.

Each trace file holds ``timestamp;power;...`` lines. Traces are cut to a common
length (``--samples``, default: the shortest trace); shorter ones are dropped.

    python scripts/tracebase_to_csv.py traces/ tracebase.csv --samples 4902
"""

import argparse
from pathlib import Path

from _traces import build_matrix, write_matrix


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("trace_dir", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--samples", type=int)
    p.add_argument("--column", type=int, default=1, help="0-based power column")
    p.add_argument("--glob", default="**/*.csv")
    args = p.parse_args()
    files = sorted(args.trace_dir.glob(args.glob))
    write_matrix(build_matrix(files, args.column, ";", 0, args.samples), args.output)


if __name__ == "__main__":
    main()
