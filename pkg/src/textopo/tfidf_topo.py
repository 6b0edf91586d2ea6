"""TF-IDF block topology features (TP2).

A document is cut into ``B`` contiguous blocks, each block becomes a TF-IDF
vector over the document's own vocabulary, and the blocks are compared by
cosine distance.  The Rips persistence of this ``B``-vertex graph is
summarised as the ``B - 1`` finite component deaths plus five loop
statistics.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from textopo.ph import rips_persistence

__all__ = [
    "DEFAULT_BLOCKS",
    "TfidfTopoFeatures",
    "split_blocks",
    "block_tfidf",
    "block_distance_matrix",
    "loop_statistics",
    "tfidf_topo_features",
]

DEFAULT_BLOCKS = 10


@dataclass(frozen=True)
class TfidfTopoFeatures:
    """``x``: finite H0 deaths, ascending.  ``y``: loop count, mean birth,
    mean duration, sample std of births, sample std of durations."""

    x: np.ndarray
    y: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    def __len__(self) -> int:
        return len(self.x) + len(self.y)


def split_blocks(tokens: Sequence[str], n_blocks: int = DEFAULT_BLOCKS) -> list[list[str]]:
    """Split ``tokens`` into ``n_blocks`` contiguous blocks whose sizes differ by at most one.

    With ``len(tokens) = q * n_blocks + r`` the first ``r`` blocks hold
    ``q + 1`` tokens.
    """
    if n_blocks < 1:
        raise ValueError(f"number of blocks must be positive, got {n_blocks}")
    tokens = list(tokens)
    if len(tokens) < n_blocks:
        raise ValueError(
            f"document has {len(tokens)} tokens, fewer than the {n_blocks} blocks requested"
        )
    q, r = divmod(len(tokens), n_blocks)
    blocks, start = [], 0
    for b in range(n_blocks):
        size = q + 1 if b < r else q
        blocks.append(tokens[start:start + size])
        start += size
    return blocks


def block_tfidf(blocks: Sequence[Sequence[str]]) -> list[dict[str, float]]:
    """TF-IDF weights per block, with the blocks as the document collection.

    ``tf`` is the raw count in the block and
    ``idf = ln((1 + B) / (1 + df)) + 1``.
    """
    B = len(blocks)
    counts = [Counter(block) for block in blocks]
    df: Counter = Counter()
    for c in counts:
        df.update(c.keys())
    idf = {term: math.log((1 + B) / (1 + n)) + 1.0 for term, n in df.items()}
    return [{term: tf * idf[term] for term, tf in c.items()} for c in counts]


def block_distance_matrix(vectors: Sequence[dict[str, float]]) -> np.ndarray:
    """Cosine distances ``1 - cos`` between sparse block vectors.

    Two vectors pointing the same way (including two zero vectors) are at
    distance exactly 0; a zero vector is at distance 1 from any nonzero one.
    """
    vocab = sorted(set().union(*(v.keys() for v in vectors))) if vectors else []
    col = {term: k for k, term in enumerate(vocab)}
    dense = np.zeros((len(vectors), len(vocab)))
    for row, v in enumerate(vectors):
        for term, w in v.items():
            dense[row, col[term]] = w
    norms = np.linalg.norm(dense, axis=1)
    unit = dense / np.where(norms > 0, norms, 1.0)[:, None]
    cos = np.clip(unit @ unit.T, 0.0, 1.0)
    dist = 1.0 - cos
    same = np.all(unit[:, None, :] == unit[None, :, :], axis=2)
    dist[same] = 0.0
    # the BLAS product is not guaranteed bit-symmetric
    dist = np.triu(dist, 1)
    return dist + dist.T


def loop_statistics(bars: np.ndarray) -> np.ndarray:
    """Count, mean birth, mean duration, std of births, std of durations.

    Standard deviations use the ``n - 1`` convention and are 0 for fewer
    than two loops; everything but the count is 0 when there are no loops.
    """
    bars = np.asarray(bars, dtype=float).reshape(-1, 2)
    n = len(bars)
    if n == 0:
        return np.zeros(5)
    births = bars[:, 0]
    durations = bars[:, 1] - bars[:, 0]
    if n == 1:
        sd_b = sd_d = 0.0
    else:
        sd_b, sd_d = float(np.std(births, ddof=1)), float(np.std(durations, ddof=1))
    return np.array([n, births.mean(), durations.mean(), sd_b, sd_d], dtype=float)


def tfidf_topo_features(tokens: Sequence[str], n_blocks: int = DEFAULT_BLOCKS,
                        stoplist: Iterable[str] | None = None) -> TfidfTopoFeatures:
    """TP2 features of one tokenised document (``n_blocks - 1 + 5`` values)."""
    if stoplist is not None:
        stop = set(stoplist)
        tokens = [t for t in tokens if t not in stop]
    blocks = split_blocks(tokens, n_blocks)
    dist = block_distance_matrix(block_tfidf(blocks))
    diagram = rips_persistence(dist)
    deaths = diagram.dim0[:, 1]
    x = np.sort(deaths[np.isfinite(deaths)])
    return TfidfTopoFeatures(x, loop_statistics(diagram.dim1))
