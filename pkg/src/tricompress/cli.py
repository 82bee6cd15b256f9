"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 input IO/parse error,
3 archive integrity error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .container import read_archive, write_archive
from .errors import ArchiveError, CsvError, SvdConvergenceError
from .matrix import CsvLayout, Orientation, compute_stats, load_csv, write_csv
from .pipeline import DEFAULT_RATIOS, PipelineConfig, compress, decompress, sweep
from .svd import SizeModel

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_ARCHIVE = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ratios(text: str) -> list[float]:
    out = []
    for part in text.replace(",", " ").split():
        try:
            out.append(float(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {part!r}") from None
    return out


def _add_csv_flags(p):
    p.add_argument("--orientation", choices=[o.value for o in Orientation], default="devices",
                   help="devices: one CSV row per meter; timestamps: one row per sample")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--header", action="store_true", help="skip one header row")


def _add_pipeline_flags(p, with_k=True):
    if with_k:
        g = p.add_mutually_exclusive_group()
        g.add_argument("-k", type=int, help="number of singular triplets to keep")
        g.add_argument("--target-ratio", type=float, help="pick k to reach this compression ratio")
    p.add_argument("--mantissa-bits", type=int, default=24)
    p.add_argument("--no-normalization", action="store_true",
                   help="store raw float factors (implies --no-sparsity)")
    p.add_argument("--no-sparsity", action="store_true")
    p.add_argument("--size-model", choices=[s.value for s in SizeModel], default="entries")
    p.add_argument("--raw-float-bytes", type=int, choices=(4, 8), default=8)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tricompress", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compress", help="CSV -> .tcz archive")
    p.add_argument("input")
    p.add_argument("output")
    _add_csv_flags(p)
    _add_pipeline_flags(p)
    p.add_argument("--json", action="store_true", help="machine-readable report")

    p = sub.add_parser("decompress", help=".tcz archive -> CSV")
    p.add_argument("input")
    p.add_argument("output")
    _add_csv_flags(p)

    p = sub.add_parser("analyze", help="shape, rank, sparsity and eigen spectrum")
    p.add_argument("input")
    p.add_argument("--spectrum", help="normalized spectrum CSV (default: <input>.spectrum.csv)")
    p.add_argument("--rank-tolerance", type=float, default=1e-10)
    p.add_argument("--json", action="store_true")
    _add_csv_flags(p)

    p = sub.add_parser("sweep", help="compress at a grid of target ratios")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="sweep.csv")
    p.add_argument("--mae-curve", help="MAE vs k/rank CSV (default: <output stem>.mae_curve.csv)")
    p.add_argument("--ratios", type=_ratios, default=list(DEFAULT_RATIOS),
                   help="comma- or space-separated target ratios")
    _add_csv_flags(p)
    _add_pipeline_flags(p, with_k=False)
    return parser


def _layout(args) -> CsvLayout:
    return CsvLayout(delimiter=args.delimiter, header=args.header,
                     orientation=Orientation(args.orientation))


def _config(args, **extra) -> PipelineConfig:
    normalization = not args.no_normalization
    try:
        return PipelineConfig(
            mantissa_bits=args.mantissa_bits,
            normalization=normalization,
            sparsity=normalization and not args.no_sparsity,
            size_model=SizeModel(args.size_model),
            raw_float_bytes=args.raw_float_bytes,
            **extra,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _read_matrix(args):
    return load_csv(Path(args.input).read_bytes(), _layout(args))


def _print_report(rep, out):
    rows = [
        ("shape (m x t)", f"{rep.m} x {rep.t}"),
        ("rank", rep.rank),
        ("k", rep.k),
        ("uncompressed bytes", rep.uncompressed_bytes),
        ("bytes after svd", rep.stage_bytes["svd"]),
        ("bytes after normalization", rep.stage_bytes["normalization"]),
        ("bytes after sparsity", rep.stage_bytes["sparsity"]),
        ("archive bytes", rep.archive_bytes),
        ("compression ratio (bytes)", f"{rep.compression_ratio:.4f}"),
        ("compression ratio (entries)", f"{rep.entry_ratio:.4f}"),
        ("stored entries", rep.stored_entries),
        ("MAE", f"{rep.mae:.6g}"),
        ("MAE, svd only", f"{rep.svd_mae:.6g}"),
        ("max abs error", f"{rep.max_abs_error:.6g}"),
        ("blocks", ", ".join(f"{k}={v}" for k, v in rep.per_block_representation.items())),
    ]
    if rep.target_ratio is not None:
        rows.insert(3, ("target ratio", rep.target_ratio))
    if rep.best_effort:
        rows.append(("best effort", "target unreachable even at k=1"))
    width = max(len(r[0]) for r in rows)
    for name, val in rows:
        print(f"{name:<{width}}  {val}", file=out)


def cmd_compress(args, out) -> int:
    x = _read_matrix(args)
    extra = {}
    if args.k is not None:
        extra["k"] = args.k
    elif args.target_ratio is not None:
        extra["target_ratio"] = args.target_ratio
    cfg = _config(args, **extra)
    if cfg.k is not None and cfg.k > min(x.shape):
        raise UsageError(f"-k {cfg.k} exceeds min(m, t) = {min(x.shape)}")
    archive, rep = compress(x, cfg)
    Path(args.output).write_bytes(write_archive(archive))
    if args.json:
        json.dump(rep.to_dict(), out, sort_keys=True, indent=2)
        out.write("\n")
    else:
        _print_report(rep, out)
    return EXIT_OK


def cmd_decompress(args, out) -> int:
    archive = read_archive(Path(args.input).read_bytes())
    xhat = decompress(archive)
    Path(args.output).write_text(write_csv(xhat, _layout(args)))
    return EXIT_OK


def cmd_analyze(args, out) -> int:
    x = _read_matrix(args)
    stats = compute_stats(x, args.rank_tolerance)
    spectrum_path = Path(args.spectrum or f"{args.input}.spectrum.csv")
    rank = stats.numerical_rank
    lines = ["k,k_over_rank,eigenvalue,normalized_eigenvalue"]
    for i, (ev, nev) in enumerate(zip(stats.eigen_spectrum, stats.normalized_spectrum), start=1):
        frac = i / rank if rank else float("nan")
        lines.append(f"{i},{frac!r},{float(ev)!r},{float(nev)!r}")
    spectrum_path.write_text("\n".join(lines) + "\n")

    m, t = stats.shape
    summary = {
        "m": m,
        "t": t,
        "rank": rank,
        "sparsity": stats.sparsity,
        "uncompressed_kb": stats.uncompressed_kb,
        "spectrum_csv": str(spectrum_path),
    }
    if args.json:
        json.dump(summary, out, sort_keys=True, indent=2)
        out.write("\n")
    else:
        for key, val in summary.items():
            print(f"{key:<16} {val}", file=out)
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    if not args.ratios or any(r <= 1 for r in args.ratios):
        raise UsageError("--ratios needs values greater than 1")
    x = _read_matrix(args)
    table = sweep(x, args.ratios, _config(args))
    output = Path(args.output)
    output.write_text(table.to_csv())
    curve = Path(args.mae_curve) if args.mae_curve else output.with_name(output.stem + ".mae_curve.csv")
    curve.write_text(table.mae_curve_csv())
    print(f"rank {table.rank}; {len(table.rows)} rows -> {output}; MAE curve -> {curve}", file=out)
    return EXIT_OK


COMMANDS = {
    "compress": cmd_compress,
    "decompress": cmd_decompress,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"tricompress: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArchiveError as exc:
        print(f"tricompress: archive error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_ARCHIVE
    except SvdConvergenceError as exc:
        print(f"tricompress: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, CsvError, UnicodeDecodeError) as exc:
        print(f"tricompress: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
