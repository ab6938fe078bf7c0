"""Exception hierarchy shared across the package.

Every error raised by artbrain code derives from :class:`ArtbrainError` so
callers (CLI, service) can map domain failures to exit codes / HTTP statuses
without catching bare ``Exception``.
"""


class ArtbrainError(Exception):
    """Base class for all artbrain errors."""


class ConfigurationError(ArtbrainError):
    """Inconsistent configuration or mismatched shapes between components."""


class NumericError(ArtbrainError):
    """Non-finite values encountered where finite math is required."""


class StateError(ArtbrainError):
    """Operation invoked on an object in the wrong state (e.g. no weights)."""


class DataError(ArtbrainError):
    """Malformed dataset contents: labels out of range, empty splits, etc."""


class FormatError(ArtbrainError):
    """Unsupported or undecodable input payload (images, rasters)."""


class ArchiveError(ArtbrainError):
    """Weight archive cannot be parsed."""


class ArchiveMagicError(ArchiveError):
    """File does not start with the archive magic bytes."""


class ArchiveTruncatedError(ArchiveError):
    """Declared tensor data extends past the end of the file."""


class ArchiveDuplicateNameError(ArchiveError):
    """Two tensors in the archive share a name."""


class AlignmentError(ArtbrainError):
    """Spatial alignment would require upsampling, which is refused."""
