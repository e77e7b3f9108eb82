"""Import machine-learning datasets shipped in nonstandard archive layouts as tables."""

from .archive import ArchiveBudget, edit_distance, extract_archive, list_nested_archives, rank_archives, tree_from_directory
from .errors import (
    BudgetExceeded,
    CorruptArchive,
    EmptyBody,
    EmptyInput,
    NetworkError,
    NoDownloadLink,
    OfflineMiss,
    PipelineFailure,
    SizeLimitExceeded,
    TabfetchError,
    UnsupportedArchiveFormat,
)
from .fetch import FetchConfig, OverrideRegistry, default_registry, fetch_dataset
from .model import (
    CandidateScore,
    DatasetRef,
    Delimiter,
    FileNode,
    FileTree,
    ImportResult,
    RaggedTable,
    Source,
    Table,
    ValidationReport,
    validate_result,
)
from .pipeline import PipelineConfig, import_tree
from .sniffer import sniff_text

__version__ = "0.1.0"
