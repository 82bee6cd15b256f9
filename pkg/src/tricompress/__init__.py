"""Cascaded lossy compression for meter-reading matrices.

Truncated SVD, shared-exponent normalization of the factors, and
coordinate encoding of the quantized factors when that is smaller.
"""

from .container import Archive, read_archive, write_archive
from .matrix import CsvLayout, MatrixStats, Orientation, TimeSeriesMatrix, compute_stats, load_csv, write_csv
from .normalization import NormalizedBlock, denormalize, normalize, normalized_size_bytes
from .pipeline import (
    DEFAULT_RATIOS,
    CompressionReport,
    PipelineConfig,
    SweepTable,
    compress,
    decompress,
    sweep,
)
from .sparse import Representation, SparseBlock, choose_representation, decode_sparse, encode_sparse, sparse_size_bytes
from .svd import SizeModel, SvdFactors, mae, reconstruct, select_k_for_ratio, storage_entries, svd, truncate

__version__ = "0.1.0"
