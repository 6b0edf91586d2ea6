"""Wasserstein distance between persistence diagrams.

Points are compared under the L-infinity ground metric and any point may be
sent to its nearest diagonal point instead, at cost ``(death - birth) / 2``.
The matching problem is solved exactly as a square assignment problem.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from textopo.ph import PersistenceDiagram

__all__ = ["wasserstein", "normalize_infinite", "diagram_distance", "matching_cost_matrix"]


def _points(diagram, name: str) -> np.ndarray:
    pts = np.asarray(diagram, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{name} contains non-finite coordinates; cap infinite bars first")
    if np.any(pts[:, 1] < pts[:, 0]):
        raise ValueError(f"{name} contains a point with death < birth")
    return pts


def matching_cost_matrix(a, b, p: float = 1.0) -> np.ndarray:
    """Square ``(m + n)`` cost matrix for matching ``a`` (m points) to ``b`` (n points).

    Row ``m + j`` is the diagonal copy of ``b[j]`` and column ``n + i`` the
    diagonal copy of ``a[i]``; a point can only use its own diagonal copy.
    Diagonal-to-diagonal entries cost nothing.  Entries are raised to ``p``.
    """
    a = _points(a, "a")
    b = _points(b, "b")
    m, n = len(a), len(b)
    cost = np.zeros((m + n, m + n))
    if m and n:
        cost[:m, :n] = np.max(np.abs(a[:, None, :] - b[None, :, :]), axis=2) ** p
    if m:
        to_diag = np.full((m, m), np.inf)
        np.fill_diagonal(to_diag, ((a[:, 1] - a[:, 0]) / 2) ** p)
        cost[:m, n:] = to_diag
    if n:
        from_diag = np.full((n, n), np.inf)
        np.fill_diagonal(from_diag, ((b[:, 1] - b[:, 0]) / 2) ** p)
        cost[m:, :n] = from_diag
    return cost


def wasserstein(a, b, p: float = 1.0) -> float:
    """p-Wasserstein distance between two single-dimension diagrams.

    Parameters
    ----------
    a, b : array_like, shape (k, 2)
        Finite ``(birth, death)`` points.  Use ``normalize_infinite`` on
        diagrams with essential classes first.
    p : float
        Exponent, ``p >= 1``.

    Returns
    -------
    float
        ``(min over matchings of sum cost**p) ** (1/p)``; 0 for two empty
        diagrams.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    cost = matching_cost_matrix(a, b, p)
    if cost.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(cost)
    total = float(cost[rows, cols].sum())
    return total ** (1.0 / p)


def normalize_infinite(diagram: PersistenceDiagram, cap: float) -> PersistenceDiagram:
    """Replace every infinite death in ``diagram`` by ``cap``."""
    out = []
    for dim in (0, 1):
        bars = np.array(diagram[dim], dtype=float).reshape(-1, 2)
        finite = bars[np.isfinite(bars)]
        if finite.size and cap < finite.max():
            raise ValueError(
                f"cap {cap!r} is below the largest finite coordinate {finite.max()!r}"
            )
        bars[np.isinf(bars[:, 1]), 1] = cap
        out.append(bars)
    return PersistenceDiagram(*out)


def diagram_distance(a: PersistenceDiagram, b: PersistenceDiagram, dim: int,
                     p: float = 1.0, cap: float | None = None) -> float:
    """Wasserstein distance of one dimension, capping infinite deaths at ``cap``.

    When ``cap`` is omitted it defaults to the largest finite coordinate of
    either diagram.
    """
    if cap is None:
        coords = np.concatenate([a[dim].ravel(), b[dim].ravel()])
        coords = coords[np.isfinite(coords)]
        cap = float(coords.max()) if coords.size else 0.0
    if math.isinf(cap):
        raise ValueError("cap must be finite")
    return wasserstein(normalize_infinite(a, cap)[dim], normalize_infinite(b, cap)[dim], p)
