"""Merged token lattices, layouts, and a service for exploring LM output
distributions."""

from .embedding import (
    ContextEmbedder,
    EmbeddingVector,
    HashedTrigramEmbedder,
    RemoteEmbedder,
    cosine,
    is_stopword,
    token_similarity,
)
from .lattice import (
    LatticeBuilder,
    LatticeNode,
    LatticeStats,
    TokenLattice,
    build_chains,
    build_lattice,
    collapse_chains,
    merge_similar,
    reconstruct_generation,
    stats,
)
from .layout import (
    LayoutParams,
    LayoutResult,
    compute_layout,
    longtail_opacity,
    node_color,
    node_size,
)
from .segmentation import (
    RawGeneration,
    SegmentationMode,
    TokenSequence,
    reconstruct,
    segment,
)
from .session import FilterResult, PromptConfig, Session, ViewState

__version__ = "0.1.0"

__all__ = [
    "ContextEmbedder",
    "EmbeddingVector",
    "FilterResult",
    "HashedTrigramEmbedder",
    "LatticeBuilder",
    "LatticeNode",
    "LatticeStats",
    "LayoutParams",
    "LayoutResult",
    "PromptConfig",
    "RawGeneration",
    "RemoteEmbedder",
    "SegmentationMode",
    "Session",
    "TokenLattice",
    "TokenSequence",
    "ViewState",
    "build_chains",
    "build_lattice",
    "collapse_chains",
    "compute_layout",
    "cosine",
    "is_stopword",
    "longtail_opacity",
    "merge_similar",
    "node_color",
    "node_size",
    "reconstruct",
    "reconstruct_generation",
    "segment",
    "stats",
    "token_similarity",
]
