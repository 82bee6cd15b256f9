"""Lossless coordinate (index, value) encoding of quantized blocks."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import SparseDecodeError
from .normalization import NormalizedBlock, mantissa_bytes, normalized_size_bytes

SPARSE_HEADER_BYTES = 12  # rows u32, cols u32, nnz u32


class Representation(str, Enum):
    DENSE = "dense"
    SPARSE = "sparse"


def index_width_bytes(rows: int, cols: int) -> int:
    """Smallest of 1, 2 or 4 bytes whose unsigned range covers max(rows, cols) - 1."""
    top = max(rows, cols) - 1
    if top < 1 << 8:
        return 1
    if top < 1 << 16:
        return 2
    return 4


@dataclass(frozen=True, eq=False)
class SparseBlock:
    shape: tuple[int, int]
    row_idx: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray  # nonzero mantissas
    mantissa_bits: int

    def __post_init__(self):
        rows, cols = (int(s) for s in self.shape)
        object.__setattr__(self, "shape", (rows, cols))
        for name in ("row_idx", "col_idx", "values"):
            arr = np.array(getattr(self, name), dtype=np.int64).reshape(-1)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (self.row_idx.size == self.col_idx.size == self.values.size):
            raise ValueError("triplet arrays differ in length")

    @property
    def nnz(self) -> int:
        return self.values.size

    @property
    def index_width_bytes(self) -> int:
        return index_width_bytes(*self.shape)

    @property
    def entries(self) -> list[tuple[int, int, int]]:
        return list(zip(self.row_idx.tolist(), self.col_idx.tolist(), self.values.tolist()))

    def validate(self):
        """Raise SparseDecodeError unless the triplets are canonical."""
        rows, cols = self.shape
        if self.nnz > rows * cols:
            raise SparseDecodeError("more entries than cells")
        if self.nnz == 0:
            return
        if self.row_idx.min() < 0 or self.row_idx.max() >= rows:
            raise SparseDecodeError("row index out of bounds")
        if self.col_idx.min() < 0 or self.col_idx.max() >= cols:
            raise SparseDecodeError("column index out of bounds")
        flat = self.row_idx * cols + self.col_idx
        if np.any(np.diff(flat) <= 0):
            raise SparseDecodeError("entries unsorted or duplicated")
        if np.any(self.values == 0):
            raise SparseDecodeError("explicit zero stored")


def encode_sparse(block: NormalizedBlock, shape: tuple[int, int]) -> SparseBlock:
    rows, cols = shape
    if block.length != rows * cols:
        raise ValueError(f"block of length {block.length} does not fit shape {shape}")
    flat = np.flatnonzero(block.mantissas)
    return SparseBlock(
        shape=(rows, cols),
        row_idx=flat // cols if cols else flat,
        col_idx=flat % cols if cols else flat,
        values=block.mantissas[flat],
        mantissa_bits=block.mantissa_bits,
    )


def decode_sparse(s: SparseBlock) -> np.ndarray:
    """Dense int64 mantissa array of length rows*cols."""
    s.validate()
    rows, cols = s.shape
    out = np.zeros(rows * cols, dtype=np.int64)
    out[s.row_idx * cols + s.col_idx] = s.values
    return out


def sparse_size_bytes(s: SparseBlock) -> int:
    per_entry = 2 * s.index_width_bytes + mantissa_bytes(s.mantissa_bits)
    return s.nnz * per_entry + SPARSE_HEADER_BYTES


def choose_representation(block: NormalizedBlock, shape: tuple[int, int]) -> Representation:
    """SPARSE only when strictly smaller than the dense block; ties stay DENSE."""
    if sparse_size_bytes(encode_sparse(block, shape)) < normalized_size_bytes(block):
        return Representation.SPARSE
    return Representation.DENSE
