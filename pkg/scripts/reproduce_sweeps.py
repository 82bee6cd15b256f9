"""Run the ratio sweep on both synthetic datasets, three-stage vs SVD-only.

Writes ``<name>.sweep.csv``, ``<name>.baseline.csv`` and ``<name>.mae_curve.csv``
per dataset into ``--out-dir`` and prints the per-row gain in byte ratio.
Pass ``--csv NAME=PATH`` to run on a real export instead of the generators.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from tricompress.matrix import load_csv
from tricompress.pipeline import DEFAULT_RATIOS, PipelineConfig, improvement_percent, sweep
from tricompress.svd import SizeModel, svd
from tricompress.synthetic import appliance_matrix, household_matrix


def run(name, x, out_dir: Path, size_model: SizeModel, mantissa_bits: int):
    start = time.perf_counter()
    f = svd(x)
    tri = sweep(x, DEFAULT_RATIOS, PipelineConfig(size_model=size_model, mantissa_bits=mantissa_bits), f)
    base = sweep(x, DEFAULT_RATIOS, PipelineConfig.svd_only(size_model=size_model), f)
    (out_dir / f"{name}.sweep.csv").write_text(tri.to_csv())
    (out_dir / f"{name}.baseline.csv").write_text(base.to_csv())
    (out_dir / f"{name}.mae_curve.csv").write_text(tri.mae_curve_csv())

    m, t = tri.shape
    print(f"\n{name}: {m} x {t}, rank {tri.rank}, {time.perf_counter() - start:.1f} s")
    print(f"{'target':>7} {'k':>4} {'ratio':>9} {'svd-only':>9} {'gain %':>7} {'MAE':>10}")
    for a, b, g in zip(tri.rows, base.rows, improvement_percent(tri, base)):
        print(f"{a.target_ratio:>7g} {a.k:>4} {a.achieved_ratio_bytes:>9.2f} "
              f"{b.achieved_ratio_bytes:>9.2f} {g:>7.1f} {a.mae:>10.4g}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    p.add_argument("--size-model", choices=[s.value for s in SizeModel], default="entries")
    p.add_argument("--mantissa-bits", type=int, default=24)
    p.add_argument("--csv", action="append", default=[], metavar="NAME=PATH")
    args = p.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    datasets = {"appliance": appliance_matrix, "household": household_matrix}
    if args.csv:
        datasets = {}
        for item in args.csv:
            name, _, path = item.partition("=")
            datasets[name] = lambda path=path: load_csv(Path(path).read_bytes())
    for name, make in datasets.items():
        run(name, make(), args.out_dir, SizeModel(args.size_model), args.mantissa_bits)


if __name__ == "__main__":
    main()
