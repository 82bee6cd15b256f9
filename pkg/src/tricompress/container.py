"""The ``.tcz`` binary archive: one header, three block descriptors, payloads.

All integers are little-endian. Layout (version 1)::

    header (32 bytes)
        magic "TCZ1" | version u16 | flags u16 | m u32 | t u32 | k u32
        | mantissa_bits u8 | reserved u8 x 7 | header CRC32 u32
    descriptor (18 bytes) x 3, for U, sigma, V in that order
        representation u8 | mantissa_bits u8 | shared_exponent i32
        | nnz u32 | payload_len u32 | CRC32 u32
    payloads, concatenated in descriptor order

The header CRC covers the 28 bytes before it. Each block CRC covers the
first 14 bytes of its descriptor followed by its payload, so a corrupted
exponent or count is caught as surely as a corrupted mantissa.

Payload encodings:
    RAW_F64 / RAW_F32   the factor values as IEEE-754 floats
    DENSE               i32 exponent, then ceil(w/8)-byte two's complement mantissas
    SPARSE              rows u32 | cols u32 | nnz u32, then nnz row indices,
                        nnz column indices (minimal unsigned width) and nnz mantissas
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import (
    BadMagicError,
    ChecksumError,
    CorruptArchiveError,
    LengthOverrunError,
    SparseDecodeError,
    TrailingBytesError,
    UnsupportedVersionError,
)
from .normalization import (
    EXPONENT_BYTES,
    MAX_MANTISSA_BITS,
    MIN_MANTISSA_BITS,
    NormalizedBlock,
    denormalize,
    mantissa_bytes,
)
from .sparse import SPARSE_HEADER_BYTES, SparseBlock, decode_sparse, index_width_bytes

MAGIC = b"TCZ1"
VERSION = 1
FLAG_NORMALIZATION = 0x1
FLAG_SPARSITY = 0x2

_HEADER = struct.Struct("<4sHHIIIB7sI")
_DESCRIPTOR = struct.Struct("<BBiIII")
HEADER_BYTES = _HEADER.size  # 32
DESCRIPTOR_BYTES = _DESCRIPTOR.size  # 18
BLOCK_NAMES = ("u", "sigma", "v")
OVERHEAD_BYTES = HEADER_BYTES + len(BLOCK_NAMES) * DESCRIPTOR_BYTES


class BlockKind(IntEnum):
    RAW_F64 = 0
    RAW_F32 = 1
    DENSE = 2
    SPARSE = 3


@dataclass(frozen=True)
class Block:
    kind: BlockKind
    mantissa_bits: int  # 0 for raw float blocks
    shared_exponent: int
    nnz: int  # stored values: all of them for dense/raw, nonzeros for sparse
    payload: bytes


@dataclass(frozen=True)
class Archive:
    m: int
    t: int
    k: int
    normalization: bool
    sparsity: bool
    mantissa_bits: int  # 0 when normalization is off
    blocks: tuple[Block, Block, Block]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("archive needs k >= 1")
        if self.m < 1 or self.t < 1:
            raise ValueError("archive needs m, t >= 1")
        if self.k > min(self.m, self.t):
            raise ValueError("k exceeds min(m, t)")
        if len(self.blocks) != len(BLOCK_NAMES):
            raise ValueError("archive holds exactly three blocks")
        if self.sparsity and not self.normalization:
            raise ValueError("sparsity encoding requires normalization")

    @property
    def block_shapes(self) -> tuple[tuple[int, int], ...]:
        return ((self.m, self.k), (1, self.k), (self.t, self.k))

    @property
    def payload_bytes(self) -> int:
        return sum(len(b.payload) for b in self.blocks)

    @property
    def size_bytes(self) -> int:
        return OVERHEAD_BYTES + self.payload_bytes


# -- integer packing -----------------------------------------------------------

def _pack_int(values: np.ndarray, width: int) -> bytes:
    le = np.ascontiguousarray(values, dtype="<i8").view(np.uint8).reshape(-1, 8)
    return le[:, :width].tobytes()


def _unpack_int(buf: bytes, width: int, signed: bool) -> np.ndarray:
    raw = np.frombuffer(buf, dtype=np.uint8).reshape(-1, width)
    padded = np.zeros((raw.shape[0], 8), dtype=np.uint8)
    padded[:, :width] = raw
    out = padded.view("<i8").reshape(-1).astype(np.int64)
    if signed and width < 8:
        sign = np.int64(1) << (8 * width - 1)
        out = (out ^ sign) - sign
    return out


# -- block builders ------------------------------------------------------------

def raw_block(values: np.ndarray, float_bytes: int = 8) -> Block:
    if float_bytes == 8:
        kind, dtype = BlockKind.RAW_F64, "<f8"
    elif float_bytes == 4:
        kind, dtype = BlockKind.RAW_F32, "<f4"
    else:
        raise ValueError("raw floats are 4 or 8 bytes")
    arr = np.ascontiguousarray(np.asarray(values).reshape(-1), dtype=dtype)
    return Block(kind, 0, 0, arr.size, arr.tobytes())


def dense_block(nb: NormalizedBlock) -> Block:
    payload = struct.pack("<i", nb.shared_exponent) + _pack_int(
        nb.mantissas, mantissa_bytes(nb.mantissa_bits)
    )
    return Block(BlockKind.DENSE, nb.mantissa_bits, nb.shared_exponent, nb.length, payload)


def sparse_block(sb: SparseBlock, shared_exponent: int) -> Block:
    iw = sb.index_width_bytes
    payload = b"".join(
        [
            struct.pack("<III", sb.shape[0], sb.shape[1], sb.nnz),
            _pack_int(sb.row_idx, iw),
            _pack_int(sb.col_idx, iw),
            _pack_int(sb.values, mantissa_bytes(sb.mantissa_bits)),
        ]
    )
    return Block(BlockKind.SPARSE, sb.mantissa_bits, shared_exponent, sb.nnz, payload)


# -- block decoding ------------------------------------------------------------

def _expect(cond: bool, msg: str):
    if not cond:
        raise CorruptArchiveError(msg)


def block_mantissas(block: Block, shape: tuple[int, int]) -> NormalizedBlock:
    """Recover the quantized block behind a DENSE or SPARSE payload."""
    rows, cols = shape
    w = block.mantissa_bits
    _expect(MIN_MANTISSA_BITS <= w <= MAX_MANTISSA_BITS, f"bad mantissa width {w}")
    mb = mantissa_bytes(w)
    p = block.payload
    if block.kind == BlockKind.DENSE:
        _expect(block.nnz == rows * cols, "dense value count does not match shape")
        _expect(len(p) == EXPONENT_BYTES + mb * rows * cols, "dense payload length")
        (exp,) = struct.unpack_from("<i", p)
        _expect(exp == block.shared_exponent, "exponent disagrees with descriptor")
        mant = _unpack_int(p[EXPONENT_BYTES:], mb, signed=True)
    elif block.kind == BlockKind.SPARSE:
        _expect(len(p) >= SPARSE_HEADER_BYTES, "sparse payload too short")
        r, c, nnz = struct.unpack_from("<III", p)
        _expect((r, c) == (rows, cols), "sparse shape disagrees with header")
        _expect(nnz == block.nnz, "sparse count disagrees with descriptor")
        iw = index_width_bytes(rows, cols)
        _expect(len(p) == SPARSE_HEADER_BYTES + nnz * (2 * iw + mb), "sparse payload length")
        off = SPARSE_HEADER_BYTES
        ri = _unpack_int(p[off:off + nnz * iw], iw, signed=False)
        off += nnz * iw
        ci = _unpack_int(p[off:off + nnz * iw], iw, signed=False)
        off += nnz * iw
        vals = _unpack_int(p[off:], mb, signed=True)
        try:
            mant = decode_sparse(SparseBlock((rows, cols), ri, ci, vals, w))
        except SparseDecodeError as exc:
            raise CorruptArchiveError(str(exc)) from exc
    else:
        raise CorruptArchiveError(f"block kind {block.kind!r} carries no mantissas")
    try:
        return NormalizedBlock(block.shared_exponent, w, mant)
    except ValueError as exc:
        raise CorruptArchiveError(str(exc)) from exc


def block_values(block: Block, shape: tuple[int, int]) -> np.ndarray:
    """Decode any block to a float64 array of the given shape."""
    n = shape[0] * shape[1]
    if block.kind in (BlockKind.RAW_F64, BlockKind.RAW_F32):
        width = 8 if block.kind == BlockKind.RAW_F64 else 4
        _expect(block.nnz == n and len(block.payload) == width * n, "raw payload length")
        arr = np.frombuffer(block.payload, dtype="<f8" if width == 8 else "<f4")
        _expect(bool(np.all(np.isfinite(arr))), "raw payload holds non-finite values")
        return arr.astype(np.float64).reshape(shape)
    return denormalize(block_mantissas(block, shape)).reshape(shape)


# -- serialization -------------------------------------------------------------

def _block_crc(descriptor_head: bytes, payload: bytes) -> int:
    return zlib.crc32(payload, zlib.crc32(descriptor_head)) & 0xFFFFFFFF


def write_archive(a: Archive) -> bytes:
    """Canonical bytes: equal archives always serialize identically."""
    flags = (FLAG_NORMALIZATION if a.normalization else 0) | (FLAG_SPARSITY if a.sparsity else 0)
    head = _HEADER.pack(MAGIC, VERSION, flags, a.m, a.t, a.k, a.mantissa_bits, bytes(7), 0)
    head = head[:-4] + struct.pack("<I", zlib.crc32(head[:-4]) & 0xFFFFFFFF)
    parts = [head]
    for b in a.blocks:
        desc = _DESCRIPTOR.pack(
            int(b.kind), b.mantissa_bits, b.shared_exponent, b.nnz, len(b.payload), 0
        )[:-4]
        parts.append(desc + struct.pack("<I", _block_crc(desc, b.payload)))
    parts.extend(b.payload for b in a.blocks)
    return b"".join(parts)


def read_archive(data: bytes) -> Archive:
    """Parse and fully validate an archive.

    Checks run in a fixed order so each corruption class maps to one error:
    magic, version, header length and CRC, descriptor/payload lengths,
    block CRCs, then semantic consistency.
    """
    data = bytes(data)
    prefix = data[: len(MAGIC)]
    if prefix != MAGIC[: len(prefix)] or not prefix:
        raise BadMagicError("not a TCZ archive")
    if len(data) < len(MAGIC) + 2:
        raise LengthOverrunError("stream ends inside the header")
    (version,) = struct.unpack_from("<H", data, len(MAGIC))
    if version != VERSION:
        raise UnsupportedVersionError(f"archive version {version} is not supported")
    if len(data) < HEADER_BYTES:
        raise LengthOverrunError("stream ends inside the header")
    _, _, flags, m, t, k, w, _reserved, hcrc = _HEADER.unpack_from(data)
    if zlib.crc32(data[: HEADER_BYTES - 4]) & 0xFFFFFFFF != hcrc:
        raise ChecksumError("header CRC mismatch")

    table_end = OVERHEAD_BYTES
    if len(data) < table_end:
        raise LengthOverrunError("stream ends inside the block table")
    descs = [
        _DESCRIPTOR.unpack_from(data, HEADER_BYTES + i * DESCRIPTOR_BYTES)
        for i in range(len(BLOCK_NAMES))
    ]
    declared = sum(d[4] for d in descs)
    available = len(data) - table_end
    if declared > available:
        raise LengthOverrunError(
            f"blocks declare {declared} payload bytes, only {available} present"
        )
    if declared < available:
        raise TrailingBytesError(f"{available - declared} bytes follow the last block")

    blocks = []
    off = table_end
    for i, (kind, bw, exp, nnz, plen, crc) in enumerate(descs):
        start = HEADER_BYTES + i * DESCRIPTOR_BYTES
        payload = data[off:off + plen]
        off += plen
        if _block_crc(data[start:start + DESCRIPTOR_BYTES - 4], payload) != crc:
            raise ChecksumError(f"CRC mismatch in block {BLOCK_NAMES[i]!r}")
        try:
            kind = BlockKind(kind)
        except ValueError:
            raise CorruptArchiveError(f"unknown block kind {kind}") from None
        blocks.append(Block(kind, bw, exp, nnz, payload))

    normalization = bool(flags & FLAG_NORMALIZATION)
    sparsity = bool(flags & FLAG_SPARSITY)
    _expect(flags & ~(FLAG_NORMALIZATION | FLAG_SPARSITY) == 0, "unknown flag bits")
    try:
        archive = Archive(m, t, k, normalization, sparsity, w, tuple(blocks))
    except ValueError as exc:
        raise CorruptArchiveError(str(exc)) from exc
    if normalization:
        _expect(MIN_MANTISSA_BITS <= w <= MAX_MANTISSA_BITS, f"bad mantissa width {w}")
    else:
        _expect(w == 0, "mantissa width set without normalization")
    for b, shape in zip(archive.blocks, archive.block_shapes):
        raw = b.kind in (BlockKind.RAW_F64, BlockKind.RAW_F32)
        _expect(raw != normalization, "block kind contradicts the normalization flag")
        _expect(b.kind != BlockKind.SPARSE or sparsity, "sparse block without the sparsity flag")
        if raw:
            _expect(b.mantissa_bits == 0 and b.shared_exponent == 0, "raw block with exponent")
        # decode once so malformed payloads surface here, not in the caller
        block_values(b, shape)
    return archive
