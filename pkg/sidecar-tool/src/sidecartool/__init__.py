"""Offline exporter of metric sidecar files for reasoning-path ensembles.

For every (question, path) pair in an ensemble file the tool computes
step and path sentence embeddings, pairwise contradiction probabilities,
and token log-probabilities, and writes them in the sidecar format the
pathcalib metrics consumer reads back. Providers are pluggable by model
identifier; the ``lexical:`` family runs with no downloads at all.
"""

__version__ = "0.1.0"

from .errors import ModelLoadError, SchemaViolation, SidecarToolError
from .export import (
    Diagnostic,
    ExportResult,
    ProviderManifest,
    QuestionPaths,
    export_file,
    export_sidecars,
    read_ensembles,
    read_gold,
    split_steps,
)
from .providers import (
    CharFrequencyScorer,
    NegationCueScorer,
    NgramEmbedder,
    TransformerEmbedder,
    TransformerLmScorer,
    TransformerNliScorer,
    resolve_contradiction_scorer,
    resolve_embedder,
    resolve_token_scorer,
)

__all__ = [
    "CharFrequencyScorer",
    "Diagnostic",
    "ExportResult",
    "ModelLoadError",
    "NegationCueScorer",
    "NgramEmbedder",
    "ProviderManifest",
    "QuestionPaths",
    "SchemaViolation",
    "SidecarToolError",
    "TransformerEmbedder",
    "TransformerLmScorer",
    "TransformerNliScorer",
    "__version__",
    "export_file",
    "export_sidecars",
    "read_ensembles",
    "read_gold",
    "resolve_contradiction_scorer",
    "resolve_embedder",
    "resolve_token_scorer",
    "split_steps",
]
