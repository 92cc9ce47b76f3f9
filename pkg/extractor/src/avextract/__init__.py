"""Score-bundle extraction from videos via pluggable similarity backends."""

from .backends import BACKEND_NAMES, Backend, BackendUnavailableError, create_backend
from .extract import ExtractorJob, VocabularyEntry, extract, load_vocabulary
from .media import MediaClips, MediaError, load_clips

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAMES",
    "Backend",
    "BackendUnavailableError",
    "ExtractorJob",
    "MediaClips",
    "MediaError",
    "VocabularyEntry",
    "create_backend",
    "extract",
    "load_clips",
    "load_vocabulary",
]
