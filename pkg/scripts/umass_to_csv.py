"""Convert per-home UMass microgrid CSV files into a home-per-row CSV.

Each file has a header row and one minute-level reading per line; the first
``--samples`` readings (default 1440, one day) become the home's row.

    python scripts/umass_to_csv.py homes/ microgrid.csv
"""

import argparse
from pathlib import Path

from _traces import build_matrix, write_matrix


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("home_dir", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--samples", type=int, default=1440)
    p.add_argument("--column", type=int, default=1, help="0-based load column")
    p.add_argument("--glob", default="*.csv")
    args = p.parse_args()
    files = sorted(args.home_dir.glob(args.glob))
    write_matrix(build_matrix(files, args.column, ",", 1, args.samples), args.output)


if __name__ == "__main__":
    main()
