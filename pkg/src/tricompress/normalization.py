"""Shared-exponent (block floating point) quantization.

A block of reals is stored as signed ``w``-bit integer mantissas plus one
radix-2 exponent ``e``::

    value_i ~= mantissa_i / 2**(w-1) * 2**e
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_MANTISSA_BITS = 4
MAX_MANTISSA_BITS = 32
DEFAULT_MANTISSA_BITS = 24
EXPONENT_BYTES = 4


@dataclass(frozen=True, eq=False)
class NormalizedBlock:
    shared_exponent: int
    mantissa_bits: int
    mantissas: np.ndarray  # int64, values fit in mantissa_bits signed

    def __post_init__(self):
        _check_width(self.mantissa_bits)
        mant = np.array(self.mantissas, dtype=np.int64).reshape(-1)
        lo, hi = mantissa_range(self.mantissa_bits)
        if mant.size and (mant.min() < lo or mant.max() > hi):
            raise ValueError(f"mantissa outside the {self.mantissa_bits}-bit signed range")
        mant.flags.writeable = False
        object.__setattr__(self, "mantissas", mant)
        object.__setattr__(self, "shared_exponent", int(self.shared_exponent))

    @property
    def length(self) -> int:
        return self.mantissas.shape[0]

    @property
    def step(self) -> float:
        """Spacing between adjacent representable values."""
        return math.ldexp(1.0, self.shared_exponent - self.mantissa_bits + 1)

    def __eq__(self, other):
        if not isinstance(other, NormalizedBlock):
            return NotImplemented
        return (
            self.shared_exponent == other.shared_exponent
            and self.mantissa_bits == other.mantissa_bits
            and np.array_equal(self.mantissas, other.mantissas)
        )

    __hash__ = None


def _check_width(w: int):
    if not MIN_MANTISSA_BITS <= w <= MAX_MANTISSA_BITS:
        raise ValueError(
            f"mantissa_bits must be in [{MIN_MANTISSA_BITS}, {MAX_MANTISSA_BITS}], got {w}"
        )


def mantissa_range(w: int) -> tuple[int, int]:
    return -(1 << (w - 1)), (1 << (w - 1)) - 1


def _quantize(values: np.ndarray, e: int, w: int) -> np.ndarray:
    # ldexp by a power of two is exact; rint rounds half to even
    return np.rint(np.ldexp(values, w - 1 - e)).astype(np.int64)


def normalize(values, mantissa_bits: int = DEFAULT_MANTISSA_BITS) -> NormalizedBlock:
    """Quantize ``values`` onto a common exponent.

    The exponent starts at the smallest e with max|v| / 2**e < 1. If the
    largest positive value then rounds up to 2**(w-1), which does not fit
    in ``w`` signed bits, e is raised by one instead of clamping so the
    half-step error bound survives.
    """
    _check_width(mantissa_bits)
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot normalize non-finite values")
    peak = float(np.max(np.abs(arr))) if arr.size else 0.0
    if peak == 0.0:
        return NormalizedBlock(0, mantissa_bits, np.zeros(arr.size, dtype=np.int64))

    _, e = math.frexp(peak)  # peak = f * 2**e with f in [0.5, 1)
    mant = _quantize(arr, e, mantissa_bits)
    if mant.max() > mantissa_range(mantissa_bits)[1]:
        e += 1
        mant = _quantize(arr, e, mantissa_bits)
    return NormalizedBlock(e, mantissa_bits, mant)


def denormalize(block: NormalizedBlock) -> np.ndarray:
    return np.ldexp(
        block.mantissas.astype(np.float64), block.shared_exponent - block.mantissa_bits + 1
    )


def error_bound(block: NormalizedBlock) -> float:
    """Half a quantization step: 2**(e - w)."""
    return math.ldexp(1.0, block.shared_exponent - block.mantissa_bits)


def mantissa_bytes(w: int) -> int:
    return (w + 7) // 8


def normalized_size_bytes(block: NormalizedBlock) -> int:
    """Dense size: ceil(w/8) bytes per mantissa plus one 4-byte exponent."""
    return mantissa_bytes(block.mantissa_bits) * block.length + EXPONENT_BYTES
