"""Hybrid conversational engine for Algerian Darja.

Dual-script normalization, character n-gram intent classification, and a
retrieval-augmented fallback grounded in ingested offer documents.
"""

__version__ = "0.1.0"

from .normalize import NormalizedUtterance, RawUtterance, Script, normalize

__all__ = ["NormalizedUtterance", "RawUtterance", "Script", "normalize", "__version__"]
