"""Topological features of text documents.

Two feature families are provided:

* TP1: sensitivity of the Vietoris-Rips persistence of the embedding-dimension
  graph to the removal of each dimension (``embedding_topo_features``).
* TP2: persistence summaries of the graph of TF-IDF block vectors
  (``tfidf_topo_features``).
"""

from textopo.ph import (
    PersistenceDiagram,
    Simplex,
    ValidationError,
    betti_at_scale,
    build_filtration,
    rips_persistence,
    validate_distance_matrix,
)
from textopo.diagrams import normalize_infinite, wasserstein
from textopo.embed_topo import (
    EmbeddingTopoFeatures,
    column_distance_matrix,
    embedding_topo_features,
    smooth_columns,
)
from textopo.tfidf_topo import (
    TfidfTopoFeatures,
    block_tfidf,
    split_blocks,
    tfidf_topo_features,
)

__all__ = [
    "PersistenceDiagram",
    "Simplex",
    "ValidationError",
    "betti_at_scale",
    "build_filtration",
    "rips_persistence",
    "validate_distance_matrix",
    "normalize_infinite",
    "wasserstein",
    "EmbeddingTopoFeatures",
    "column_distance_matrix",
    "embedding_topo_features",
    "smooth_columns",
    "TfidfTopoFeatures",
    "block_tfidf",
    "split_blocks",
    "tfidf_topo_features",
]

__version__ = "0.1.0"
