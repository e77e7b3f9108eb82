"""Exception hierarchy.

Heuristic dead ends inside the import pipeline never raise; they produce the
fallback structure instead. Everything here signals a real failure.
"""


class TabfetchError(Exception):
    """Base class for all errors raised by this package."""


class ArchiveError(TabfetchError):
    pass


class UnsupportedArchiveFormat(ArchiveError):
    pass


class CorruptArchive(ArchiveError):
    pass


class BudgetExceeded(ArchiveError):
    pass


class EmptyInput(TabfetchError, ValueError):
    pass


class PipelineFailure(TabfetchError):
    pass


class FetchError(TabfetchError):
    pass


class NetworkError(FetchError):
    pass


class NoDownloadLink(FetchError):
    pass


class SizeLimitExceeded(FetchError):
    pass


class EmptyBody(FetchError):
    pass


class OfflineMiss(FetchError):
    pass


class OverrideUnavailable(FetchError):
    """Raised by a registered importer that has no working implementation."""
