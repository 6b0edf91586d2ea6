"""Embedding-based topological features (TP1).

A document embedded as a ``T x D`` matrix is read as a D-channel time
series.  Each channel is smoothed with a fixed 7-tap kernel, channels are
compared with a magnitude-weighted cosine distance, and the Rips persistence
of the resulting ``D x D`` graph is probed by deleting one vertex at a time.
The feature for dimension ``d`` is the Wasserstein distance between the full
diagram and the diagram with vertex ``d`` removed, for H0 and H1 separately.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from textopo.diagrams import normalize_infinite, wasserstein
from textopo.ph import PersistenceDiagram, rips_persistence

__all__ = [
    "SMOOTHING_WEIGHTS",
    "EmbeddingTopoFeatures",
    "smooth_columns",
    "column_distance_matrix",
    "embedding_topo_features",
]

# lags -3..+3; deliberately unnormalised (sum 11/4)
SMOOTHING_WEIGHTS = np.array([1 / 8, 1 / 4, 1 / 2, 1.0, 1 / 2, 1 / 4, 1 / 8])

SMOOTHING_MODES = ("truncate", "renormalize")


@dataclass(frozen=True)
class EmbeddingTopoFeatures:
    omega0: np.ndarray
    omega1: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.omega0, self.omega1])

    def __len__(self) -> int:
        return len(self.omega0) + len(self.omega1)


def _as_embedding(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 2:
        raise ValueError(f"embedding matrix must be 2-D (tokens x dims), got shape {psi.shape}")
    if psi.shape[0] < 1:
        raise ValueError("embedding matrix has no rows")
    if not np.all(np.isfinite(psi)):
        raise ValueError("embedding matrix contains non-finite values")
    return psi


def smooth_columns(psi, mode: str = "truncate") -> np.ndarray:
    """Apply the 7-tap smoothing kernel down every column of ``psi``.

    Near the ends of the sequence the kernel is cut to the rows that exist.
    With ``mode="truncate"`` the surviving terms are summed as-is; with
    ``mode="renormalize"`` they are rescaled so that the surviving weights
    total the full kernel sum (a constant column then smooths to a constant).
    """
    if mode not in SMOOTHING_MODES:
        raise ValueError(f"unknown smoothing mode {mode!r}; expected one of {SMOOTHING_MODES}")
    psi = _as_embedding(psi)
    T = psi.shape[0]
    padded = np.zeros((T + 6, psi.shape[1]))
    padded[3:3 + T] = psi
    out = np.zeros_like(psi)
    for lag, w in zip(range(-3, 4), SMOOTHING_WEIGHTS):
        out += w * padded[3 + lag:3 + lag + T]
    if mode == "renormalize":
        mask = np.zeros(T + 6)
        mask[3:3 + T] = 1.0
        covered = sum(w * mask[3 + lag:3 + lag + T]
                      for lag, w in zip(range(-3, 4), SMOOTHING_WEIGHTS))
        out *= (SMOOTHING_WEIGHTS.sum() / covered)[:, None]
    return out


def column_distance_matrix(psi_s) -> np.ndarray:
    """Distance between embedding dimensions (columns) of a smoothed matrix.

    ``theta(i, j) = |x_i| |x_j| (1 - cos(x_i, x_j)) / T``.  The factor
    ``1 - cos`` is evaluated as half the squared distance between the unit
    columns, which is exactly zero for parallel columns.  A zero column is
    at distance 0 from everything.
    """
    x = _as_embedding(psi_s)
    T = x.shape[0]
    norms = np.linalg.norm(x, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    unit = (x / safe).T
    one_minus_cos = 0.5 * squareform(pdist(unit, "sqeuclidean"))
    theta = np.outer(norms, norms) * one_minus_cos / T
    np.fill_diagonal(theta, 0.0)
    return np.maximum(theta, 0.0)


def _sensitivity(full: PersistenceDiagram, reduced: PersistenceDiagram,
                 cap: float, p: float) -> tuple[float, float]:
    full = normalize_infinite(full, cap)
    reduced = normalize_infinite(reduced, cap)
    return wasserstein(full.dim0, reduced.dim0, p), wasserstein(full.dim1, reduced.dim1, p)


def embedding_topo_features(psi, p: float = 1.0, smoothing: str = "truncate",
                            max_scale: float | None = None,
                            workers: int | None = None) -> EmbeddingTopoFeatures:
    """TP1 features of one document.

    Parameters
    ----------
    psi : array_like, shape (T, D)
        One row per in-vocabulary token in document order; ``D >= 3``.
    p : float
        Wasserstein exponent.
    smoothing : {"truncate", "renormalize"}
        Boundary handling of the smoothing kernel.
    max_scale : float, optional
        Filtration cap passed to ``rips_persistence``.
    workers : int, optional
        Threads for the leave-one-out diagrams; results do not depend on it.

    Returns
    -------
    EmbeddingTopoFeatures
        ``omega0[d]`` / ``omega1[d]``: H0 / H1 Wasserstein distance between
        the full diagram and the diagram without dimension ``d``.  Infinite
        H0 deaths are capped at the largest entry of the full distance
        matrix on both sides of each comparison.
    """
    psi = _as_embedding(psi)
    D = psi.shape[1]
    if D < 3:
        raise ValueError(f"need at least 3 embedding dimensions, got {D}")
    theta = column_distance_matrix(smooth_columns(psi, smoothing))
    full = rips_persistence(theta, max_scale=max_scale)
    # deleting a vertex never raises the maximum, so this cap serves both sides
    cap = float(theta.max())

    def one(d: int) -> tuple[float, float]:
        keep = np.delete(np.arange(D), d)
        reduced = rips_persistence(theta[np.ix_(keep, keep)], max_scale=max_scale)
        return _sensitivity(full, reduced, cap, p)

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(D)))
    else:
        results = [one(d) for d in range(D)]
    omega = np.array(results, dtype=float).reshape(D, 2)
    return EmbeddingTopoFeatures(omega[:, 0].copy(), omega[:, 1].copy())
