"""Dense meter-reading matrices, CSV ingestion and dataset statistics.

Rows are metering devices (m) and columns are sample instants (t).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import IO, Union

import numpy as np

from .errors import (
    CsvParseError,
    EmptyInputError,
    NonFiniteValueError,
    RaggedRowsError,
)

DEFAULT_RANK_TOLERANCE = 1e-10


class Orientation(str, Enum):
    DEVICES = "devices"  # one CSV row per device
    TIMESTAMPS = "timestamps"  # one CSV row per sample instant


@dataclass(frozen=True)
class CsvLayout:
    delimiter: str = ","
    header: bool = False
    orientation: Orientation = Orientation.DEVICES


@dataclass(frozen=True, eq=False)
class TimeSeriesMatrix:
    """An immutable m x t matrix of finite float64 readings."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"matrix must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValueError("matrix contains NaN or infinity")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)

    __hash__ = None


MatrixLike = Union[TimeSeriesMatrix, np.ndarray]


def as_array(x: MatrixLike) -> np.ndarray:
    if isinstance(x, TimeSeriesMatrix):
        return x.values
    return np.asarray(x, dtype=np.float64)


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source).decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_csv(source: Union[bytes, str, IO], layout: CsvLayout = CsvLayout()) -> TimeSeriesMatrix:
    """Parse delimited text into a TimeSeriesMatrix.

    ``source`` may be bytes (UTF-8), a str, or a readable file object.
    Blank lines are skipped. With ``Orientation.TIMESTAMPS`` the parsed
    table is transposed so that devices end up as rows.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text), delimiter=layout.delimiter)
    rows = [r for r in reader if r and any(cell.strip() for cell in r)]
    if layout.header and rows:
        rows = rows[1:]
    if not rows:
        raise EmptyInputError("CSV input contains no data rows")

    width = len(rows[0])
    parsed = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRowsError(
                f"row {i} has {len(row)} fields, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise CsvParseError(f"row {i}, column {j}: cannot parse {cell!r}") from None
            if not math.isfinite(v):
                raise NonFiniteValueError(f"row {i}, column {j}: non-finite value {cell!r}")
            parsed[i, j] = v

    if layout.orientation == Orientation.TIMESTAMPS:
        parsed = parsed.T
    return TimeSeriesMatrix(parsed)


def write_csv(x: MatrixLike, layout: CsvLayout = CsvLayout()) -> str:
    """Format a matrix as CSV text using shortest round-trip float repr."""
    arr = as_array(x)
    if layout.orientation == Orientation.TIMESTAMPS:
        arr = arr.T
    out = io.StringIO()
    writer = csv.writer(out, delimiter=layout.delimiter, lineterminator="\n")
    if layout.header:
        writer.writerow([f"c{j}" for j in range(arr.shape[1])])
    for row in arr:
        writer.writerow([repr(float(v)) for v in row])
    return out.getvalue()


@dataclass(frozen=True, eq=False)
class MatrixStats:
    numerical_rank: int
    sparsity: float
    eigen_spectrum: np.ndarray
    normalized_spectrum: np.ndarray
    shape: tuple[int, int]

    @property
    def uncompressed_kb(self) -> float:
        """Size at 8 bytes per reading, in kB (1000 bytes)."""
        m, t = self.shape
        return m * t * 8 / 1000.0


def numerical_rank(sigma: np.ndarray, rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> int:
    """Count singular values strictly above ``rank_tolerance * sigma[0]``."""
    if len(sigma) == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > rank_tolerance * sigma[0]))


def compute_stats(x: MatrixLike, rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> MatrixStats:
    if rank_tolerance < 0:
        raise ValueError("rank_tolerance must be non-negative")
    from .svd import singular_values

    arr = as_array(x)
    sigma = singular_values(arr)
    eig = sigma * sigma
    if eig.size and eig[0] > 0:
        normalized = eig / eig[0]
    else:
        normalized = np.zeros_like(eig)
    sparsity = float(np.count_nonzero(arr == 0.0)) / arr.size
    return MatrixStats(
        numerical_rank=numerical_rank(sigma, rank_tolerance),
        sparsity=sparsity,
        eigen_spectrum=eig,
        normalized_spectrum=normalized,
        shape=arr.shape,
    )
