"""The three-stage cascade: truncated SVD -> shared-exponent normalization ->
sparsity encoding, its inverse, and the ratio sweep harness."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import container
from .container import Archive, read_archive, write_archive
from .matrix import DEFAULT_RANK_TOLERANCE, MatrixLike, TimeSeriesMatrix, as_array
from .normalization import (
    DEFAULT_MANTISSA_BITS,
    MAX_MANTISSA_BITS,
    mantissa_bytes,
    normalize,
    normalized_size_bytes,
)
from .sparse import (
    SPARSE_HEADER_BYTES,
    Representation,
    choose_representation,
    encode_sparse,
    index_width_bytes,
)
from .svd import (
    KSelection,
    SizeModel,
    SvdFactors,
    frobenius_error,
    mae,
    max_abs_error,
    rank_of,
    select_k_for_ratio,
    storage_entries,
    svd,
    truncate,
)

DEFAULT_RATIOS = (78, 39, 25, 19, 15, 9, 5, 4)
STAGES = ("svd", "normalization", "sparsity")


@dataclass(frozen=True)
class PipelineConfig:
    """Stage toggles and k selection.

    Set at most one of ``k`` and ``target_ratio``; with neither, k is the
    numerical rank of the input.
    """

    k: Optional[int] = None
    target_ratio: Optional[float] = None
    size_model: SizeModel = SizeModel.ENTRY_COUNT
    mantissa_bits: int = DEFAULT_MANTISSA_BITS
    normalization: bool = True
    sparsity: bool = True
    raw_float_bytes: int = 8
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE

    def __post_init__(self):
        if self.k is not None and self.target_ratio is not None:
            raise ValueError("k and target_ratio are mutually exclusive")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.target_ratio is not None and not self.target_ratio > 1:
            raise ValueError("target_ratio must exceed 1")
        if self.sparsity and not self.normalization:
            raise ValueError("the sparsity stage consumes quantized mantissas; enable normalization")
        if self.raw_float_bytes not in (4, 8):
            raise ValueError("raw_float_bytes must be 4 or 8")
        if self.normalization and not 4 <= self.mantissa_bits <= MAX_MANTISSA_BITS:
            raise ValueError("mantissa_bits must be in [4, 32]")
        object.__setattr__(self, "size_model", SizeModel(self.size_model))

    @classmethod
    def svd_only(cls, **kw) -> "PipelineConfig":
        return cls(normalization=False, sparsity=False, **kw)


@dataclass
class CompressionReport:
    m: int
    t: int
    k: int
    rank: int
    raw_float_bytes: int
    uncompressed_bytes: int
    uncompressed_bytes_by_width: dict
    stored_entries: int
    entry_ratio: float
    stage_bytes: dict
    archive_bytes: int
    compression_ratio: float
    mae: float
    max_abs_error: float
    frobenius_error: float
    svd_mae: float  # truncation alone, before any quantization
    per_block_representation: dict
    target_ratio: Optional[float] = None
    best_effort: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["uncompressed_bytes_by_width"] = {str(w): b for w, b in self.uncompressed_bytes_by_width.items()}
        return d


def _sigma_width(sigma: np.ndarray, w: int) -> int:
    # sigma spans the whole spectrum's dynamic range; k values are cheap to keep wide
    k = sigma.shape[0]
    if k > 1 and (sigma[-1] == 0.0 or sigma[0] / sigma[-1] > 2.0 ** (w - 4)):
        return MAX_MANTISSA_BITS
    return w


def _encode_factor(values: np.ndarray, shape, w: int, cfg: PipelineConfig):
    """Returns (block, normalized_bytes, representation label)."""
    if not cfg.normalization:
        return container.raw_block(values, cfg.raw_float_bytes), None, "raw"
    nb = normalize(values.reshape(-1), w)
    dense_bytes = normalized_size_bytes(nb)
    if cfg.sparsity and choose_representation(nb, shape) == Representation.SPARSE:
        return container.sparse_block(encode_sparse(nb, shape), nb.shared_exponent), dense_bytes, "sparse"
    return container.dense_block(nb), dense_bytes, "dense"


def _prepared(f: SvdFactors, cfg: PipelineConfig):
    m, t = f.source_shape
    k = f.k
    u, sigma, v = f.u, f.sigma, f.v
    dead = sigma == 0.0
    if dead.any():
        # components with zero weight reconstruct to nothing; store them as zeros
        u = np.where(dead, 0.0, u)
        v = np.where(dead, 0.0, v)
    widths = (cfg.mantissa_bits, _sigma_width(sigma, cfg.mantissa_bits), cfg.mantissa_bits)
    shapes = ((m, k), (1, k), (t, k))
    return zip(container.BLOCK_NAMES, (u, sigma, v), shapes, widths)


def encode_factors(f: SvdFactors, cfg: PipelineConfig) -> tuple[Archive, dict, dict]:
    """Quantize and pack truncated factors. Returns (archive, stage_bytes, representations)."""
    m, t = f.source_shape
    blocks, reps = [], {}
    dense_total = 0
    for name, values, shape, w in _prepared(f, cfg):
        block, dense_bytes, label = _encode_factor(np.asarray(values), shape, w, cfg)
        blocks.append(block)
        reps[name] = label
        dense_total += dense_bytes or 0

    archive = Archive(
        m=m,
        t=t,
        k=f.k,
        normalization=cfg.normalization,
        sparsity=cfg.sparsity,
        mantissa_bits=cfg.mantissa_bits if cfg.normalization else 0,
        blocks=tuple(blocks),
    )
    svd_bytes = storage_entries(m, t, f.k) * cfg.raw_float_bytes
    norm_bytes = dense_total if cfg.normalization else svd_bytes
    stage_bytes = {
        "svd": svd_bytes,
        "normalization": norm_bytes,
        "sparsity": archive.payload_bytes if cfg.sparsity else norm_bytes,
    }
    return archive, stage_bytes, reps


def archive_size_bytes(f: SvdFactors, cfg: PipelineConfig) -> int:
    """Size encode_factors would produce, without packing any payload."""
    m, t = f.source_shape
    if not cfg.normalization:
        return container.OVERHEAD_BYTES + storage_entries(m, t, f.k) * cfg.raw_float_bytes
    total = container.OVERHEAD_BYTES
    for _, values, shape, w in _prepared(f, cfg):
        nb = normalize(np.asarray(values).reshape(-1), w)
        dense = normalized_size_bytes(nb)
        if cfg.sparsity:
            nnz = int(np.count_nonzero(nb.mantissas))
            per = 2 * index_width_bytes(*shape) + mantissa_bytes(w)
            total += min(dense, nnz * per + SPARSE_HEADER_BYTES)
        else:
            total += dense
    return total


def decode_factors(a: Archive) -> SvdFactors:
    u, sigma, v = (container.block_values(b, s) for b, s in zip(a.blocks, a.block_shapes))
    return SvdFactors(u, sigma.reshape(-1), v)


def decompress(a: Union[Archive, bytes]) -> TimeSeriesMatrix:
    """Rebuild the matrix from an archive object or its serialized bytes."""
    if not isinstance(a, Archive):
        a = read_archive(a)
    f = decode_factors(a)
    return TimeSeriesMatrix((f.u * f.sigma) @ f.v.T)


def stored_entries(a: Archive) -> int:
    return sum(b.nnz for b in a.blocks)


class _Compressor:
    """Holds one input's SVD so several k values can share it."""

    def __init__(self, x: MatrixLike, cfg: PipelineConfig, factors: Optional[SvdFactors] = None):
        self.x = as_array(x)
        self.cfg = cfg
        self.factors = factors if factors is not None else svd(self.x)
        self.rank = rank_of(self.factors, cfg.rank_tolerance)
        self._archives: dict = {}
        self._sizes: dict = {}

    @property
    def shape(self):
        return self.x.shape

    @property
    def uncompressed_bytes(self) -> int:
        m, t = self.shape
        return m * t * self.cfg.raw_float_bytes

    def encoded(self, k: int):
        if k not in self._archives:
            self._archives[k] = encode_factors(truncate(self.factors, k), self.cfg)
        return self._archives[k]

    def bytes_ratio(self, k: int) -> float:
        if k not in self._sizes:
            self._sizes[k] = archive_size_bytes(truncate(self.factors, k), self.cfg)
        return self.uncompressed_bytes / self._sizes[k]

    def select(self, target_ratio: float, size_model: SizeModel) -> KSelection:
        return select_k_for_ratio(
            self.shape, target_ratio, size_model, rank=self.rank, ratio_at=self.bytes_ratio
        )

    def run(self, k: int, selection: Optional[KSelection] = None, target=None):
        m, t = self.shape
        if not 1 <= k <= min(m, t):
            raise ValueError(f"k={k} outside [1, {min(m, t)}]")
        archive, stage_bytes, reps = self.encoded(k)
        xhat = decompress(archive).values
        xk = (self.factors.u[:, :k] * self.factors.sigma[:k]) @ self.factors.v[:, :k].T
        report = CompressionReport(
            m=m,
            t=t,
            k=k,
            rank=self.rank,
            raw_float_bytes=self.cfg.raw_float_bytes,
            uncompressed_bytes=self.uncompressed_bytes,
            uncompressed_bytes_by_width={4: m * t * 4, 8: m * t * 8},
            stored_entries=stored_entries(archive),
            entry_ratio=(m * t) / storage_entries(m, t, k),
            stage_bytes=stage_bytes,
            archive_bytes=archive.size_bytes,
            compression_ratio=self.uncompressed_bytes / archive.size_bytes,
            mae=mae(self.x, xhat),
            max_abs_error=max_abs_error(self.x, xhat),
            frobenius_error=frobenius_error(self.x, xhat),
            svd_mae=mae(self.x, xk),
            per_block_representation=reps,
            target_ratio=target,
            best_effort=bool(selection.best_effort) if selection else False,
        )
        return archive, report


def compress(x: MatrixLike, cfg: PipelineConfig = PipelineConfig()) -> tuple[Archive, CompressionReport]:
    comp = _Compressor(x, cfg)
    if cfg.k is not None:
        return comp.run(cfg.k)
    if cfg.target_ratio is not None:
        sel = comp.select(cfg.target_ratio, cfg.size_model)
        return comp.run(sel.k, sel, cfg.target_ratio)
    return comp.run(max(comp.rank, 1))


def compress_to_bytes(x: MatrixLike, cfg: PipelineConfig = PipelineConfig()) -> tuple[bytes, CompressionReport]:
    archive, report = compress(x, cfg)
    return write_archive(archive), report


# -- sweep -----------------------------------------------------------------------

SWEEP_COLUMNS = (
    "target_ratio",
    "k",
    "achieved_ratio_entries",
    "achieved_ratio_bytes",
    "mae",
    "max_abs_error",
    "bytes_stage1",
    "bytes_stage2",
    "bytes_stage3",
    # extras beyond the plot columns
    "best_effort",
    "frobenius_error",
    "k_over_rank",
)


@dataclass(frozen=True)
class SweepRow:
    target_ratio: float
    k: int
    achieved_ratio_entries: float
    achieved_ratio_bytes: float
    mae: float
    max_abs_error: float
    bytes_stage1: int
    bytes_stage2: int
    bytes_stage3: int
    best_effort: bool
    frobenius_error: float
    k_over_rank: float


@dataclass
class SweepTable:
    rank: int
    shape: tuple
    rows: list = field(default_factory=list)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in SWEEP_COLUMNS])
        return out.getvalue()

    def mae_vs_k_fraction(self) -> list[tuple[int, float, float]]:
        """(k, k/rank, mae) per distinct k, ascending: the MAE-vs-k/rank curve."""
        seen = {}
        for r in self.rows:
            seen.setdefault(r.k, (r.k, r.k_over_rank, r.mae))
        return [seen[k] for k in sorted(seen)]

    def mae_curve_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("k", "k_over_rank", "mae"))
        for row in self.mae_vs_k_fraction():
            w.writerow([_fmt(v) for v in row])
        return out.getvalue()


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def sweep(
    x: MatrixLike,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    cfg: PipelineConfig = PipelineConfig(),
    factors: Optional[SvdFactors] = None,
) -> SweepTable:
    """Select k for each target ratio and compress at it.

    ``cfg.size_model`` drives k selection; ``cfg.k``/``cfg.target_ratio``
    are ignored. Rows follow the order of ``ratios``.
    """
    if any(not r > 1 for r in ratios):
        raise ValueError("every target ratio must exceed 1")
    comp = _Compressor(x, cfg, factors)
    table = SweepTable(rank=comp.rank, shape=comp.shape)
    for target in ratios:
        sel = comp.select(float(target), cfg.size_model)
        _, rep = comp.run(sel.k, sel, float(target))
        table.rows.append(
            SweepRow(
                target_ratio=float(target),
                k=sel.k,
                achieved_ratio_entries=rep.entry_ratio,
                achieved_ratio_bytes=rep.compression_ratio,
                mae=rep.mae,
                max_abs_error=rep.max_abs_error,
                bytes_stage1=rep.stage_bytes["svd"],
                bytes_stage2=rep.stage_bytes["normalization"],
                bytes_stage3=rep.stage_bytes["sparsity"],
                best_effort=sel.best_effort,
                frobenius_error=rep.frobenius_error,
                k_over_rank=sel.k / comp.rank if comp.rank else float("nan"),
            )
        )
    return table


def improvement_percent(tri: SweepTable, baseline: SweepTable) -> list[float]:
    """Per-row gain in byte compression ratio of ``tri`` over ``baseline``, in percent."""
    if len(tri.rows) != len(baseline.rows):
        raise ValueError("tables have different row counts")
    return [
        100.0 * (a.achieved_ratio_bytes / b.achieved_ratio_bytes - 1.0)
        for a, b in zip(tri.rows, baseline.rows)
    ]
