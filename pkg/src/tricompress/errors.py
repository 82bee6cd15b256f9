"""Exception hierarchy shared by every stage of the codec."""


class TriCompressError(Exception):
    """Base class for all codec errors."""


# -- CSV ingestion ---------------------------------------------------------

class CsvError(TriCompressError, ValueError):
    pass


class EmptyInputError(CsvError):
    pass


class CsvParseError(CsvError):
    pass


class RaggedRowsError(CsvError):
    pass


class NonFiniteValueError(CsvError):
    pass


# -- numerics --------------------------------------------------------------

class SvdConvergenceError(TriCompressError, ArithmeticError):
    """Bidiagonal QR iteration exceeded its sweep budget."""


# -- archive ---------------------------------------------------------------

class ArchiveError(TriCompressError, ValueError):
    pass


class BadMagicError(ArchiveError):
    pass


class UnsupportedVersionError(ArchiveError):
    pass


class LengthOverrunError(ArchiveError):
    """Declared lengths run past the end of the available bytes."""


class TrailingBytesError(ArchiveError):
    """Declared lengths do not consume the whole stream."""


class ChecksumError(ArchiveError):
    pass


class CorruptArchiveError(ArchiveError):
    """Checksums verify but the decoded fields are inconsistent."""


class SparseDecodeError(TriCompressError, ValueError):
    """Coordinate triplets are out of bounds, unsorted or hold zeros."""
