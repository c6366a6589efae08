"""Checkpoint embedding-table extractor writing plain-text interchange files."""

from .extract import (
    ExtractionConfig,
    StsSpec,
    extract_counts,
    extract_embeddings,
    main,
    pretokenize_sts,
    run,
    vocab_in_index_order,
    write_embeddings,
)

__version__ = "0.1.0"

__all__ = [
    "ExtractionConfig",
    "StsSpec",
    "extract_counts",
    "extract_embeddings",
    "main",
    "pretokenize_sts",
    "run",
    "vocab_in_index_order",
    "write_embeddings",
]
