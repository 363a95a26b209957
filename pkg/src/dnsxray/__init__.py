"""Passive-DNS feature extraction, classification and attribution toolkit."""

__version__ = "0.1.0"

from .errors import ToolError
from .features import FEATURE_NAMES
from .ingest import AnswerRecord, DnsObservation
from .labeling import Label

__all__ = [
    "__version__",
    "ToolError",
    "FEATURE_NAMES",
    "AnswerRecord",
    "DnsObservation",
    "Label",
]
