"""Shared helper for the dataset converters: one trace file per device -> device-per-row CSV."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from tricompress.matrix import CsvLayout, write_csv


def read_trace(path: Path, column: int, delimiter: str, header_rows: int) -> np.ndarray:
    values = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh, delimiter=delimiter)):
            if i < header_rows or len(row) <= column:
                continue
            try:
                v = float(row[column])
            except ValueError:
                continue
            if math.isfinite(v):
                values.append(v)
    return np.asarray(values)


def build_matrix(files, column, delimiter, header_rows, samples=None):
    traces = [read_trace(p, column, delimiter, header_rows) for p in files]
    traces = [t for t in traces if t.size]
    if not traces:
        raise SystemExit("no readable traces")
    t = samples or min(len(tr) for tr in traces)
    kept = [tr[:t] for tr in traces if len(tr) >= t]
    return np.vstack(kept)


def write_matrix(x: np.ndarray, out: Path) -> None:
    out.write_text(write_csv(x, CsvLayout()))
    print(f"{x.shape[0]} devices x {x.shape[1]} samples -> {out}")
