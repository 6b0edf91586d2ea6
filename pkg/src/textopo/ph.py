"""Vietoris-Rips persistent homology in dimensions 0 and 1.

Dimension 0 is computed with a union-find sweep over the edges (the merge
events of Kruskal's algorithm).  Dimension 1 is computed by reducing the
coboundary matrix of the edges over Z/2, processed in reverse filtration
order.  Edges that already kill a component in dimension 0 are skipped
(clearing), and a column whose earliest coface is still unclaimed is paired
without materialising it.

Filtration order is (diameter, dimension, lexicographic vertices) throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "ValidationError",
    "Simplex",
    "PersistenceDiagram",
    "validate_distance_matrix",
    "build_filtration",
    "rips_persistence",
    "betti_at_scale",
]


class ValidationError(ValueError):
    """Raised when a distance matrix violates symmetry, sign or shape rules.

    ``index`` holds the offending ``(i, j)`` pair when there is one.
    """

    def __init__(self, message: str, index: tuple[int, int] | None = None):
        super().__init__(message)
        self.index = index


class Simplex(NamedTuple):
    vertices: tuple[int, ...]
    diameter: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True)
class PersistenceDiagram:
    """Bars of a Rips filtration, one ``(k, 2)`` array per dimension.

    ``dim0`` is sorted by death (the infinite bar last), ``dim1`` by
    ``(birth, death)``.
    """

    dim0: np.ndarray
    dim1: np.ndarray

    def __getitem__(self, dim: int) -> np.ndarray:
        if dim == 0:
            return self.dim0
        if dim == 1:
            return self.dim1
        raise KeyError(dim)

    def betti(self, scale: float) -> tuple[int, int]:
        return (_alive(self.dim0, scale), _alive(self.dim1, scale))

    def lines(self, fmt: str = "{:.12g}") -> list[str]:
        """Render as ``dim birth death`` lines (the diagram interchange format)."""
        out = []
        for dim, bars in ((0, self.dim0), (1, self.dim1)):
            for birth, death in bars:
                out.append(f"{dim} {_fmt(birth, fmt)} {_fmt(death, fmt)}")
        return out

    @classmethod
    def from_lines(cls, lines) -> "PersistenceDiagram":
        bars: dict[int, list[tuple[float, float]]] = {0: [], 1: []}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'dim birth death', got {line!r}")
            try:
                dim = int(parts[0])
                birth, death = float(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            if dim not in bars:
                raise ValueError(f"line {lineno}: unsupported dimension {dim}")
            bars[dim].append((birth, death))
        return cls(_as_bars(bars[0]), _as_bars(bars[1]))


def _fmt(x: float, fmt: str) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return fmt.format(x)


def _alive(bars: np.ndarray, scale: float) -> int:
    if len(bars) == 0:
        return 0
    return int(np.count_nonzero((bars[:, 0] <= scale) & (scale < bars[:, 1])))


def _as_bars(pairs) -> np.ndarray:
    return np.asarray(pairs, dtype=float).reshape(-1, 2)


def validate_distance_matrix(dist) -> np.ndarray:
    """Return ``dist`` as a float array after checking the metric-input rules.

    The matrix must be square, finite, exactly symmetric, nonnegative and
    zero on the diagonal.  Errors name the first offending index pair.
    """
    d = np.asarray(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {d.shape}")
    bad = np.argwhere(~np.isfinite(d))
    if len(bad):
        i, j = map(int, bad[0])
        raise ValidationError(f"non-finite entry at ({i}, {j})", (i, j))
    bad = np.argwhere(d < 0)
    if len(bad):
        i, j = map(int, bad[0])
        raise ValidationError(f"negative entry {d[i, j]!r} at ({i}, {j})", (i, j))
    bad = np.argwhere(d != d.T)
    if len(bad):
        i, j = map(int, bad[0])
        raise ValidationError(
            f"matrix is not symmetric at ({i}, {j}): {d[i, j]!r} != {d[j, i]!r}", (i, j)
        )
    diag = np.flatnonzero(np.diag(d))
    if len(diag):
        i = int(diag[0])
        raise ValidationError(f"nonzero diagonal entry at ({i}, {i})", (i, i))
    return d


def build_filtration(dist, max_dim: int = 1, max_scale: float | None = None) -> list[Simplex]:
    """List every Rips simplex of dimension <= ``max_dim + 1`` in filtration order.

    Intended for small inputs and inspection; ``rips_persistence`` never
    materialises the triangles.
    """
    if max_dim not in (0, 1):
        raise ValueError(f"max_dim must be 0 or 1, got {max_dim}")
    d = validate_distance_matrix(dist)
    n = d.shape[0]
    out = [Simplex((v,), 0.0) for v in range(n)]
    for size in range(2, max_dim + 3):
        for verts in itertools.combinations(range(n), size):
            diam = max(d[u, v] for u, v in itertools.combinations(verts, 2))
            if max_scale is None or diam <= max_scale:
                out.append(Simplex(verts, float(diam)))
    out.sort(key=lambda s: (s.diameter, s.dim, s.vertices))
    return out


def _find(parent: list[int], x: int) -> int:
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


_NO_COFACE = np.iinfo(np.int64).max


class _Ranked:
    """Integer encoding of edges and triangles that sorts in filtration order.

    Every diameter is an edge length, so its rank among the distinct edge
    lengths stands in for it.  An edge ``i < j`` becomes
    ``rank * n**2 + i * n + j``; a triangle ``i < j < k`` becomes
    ``rank * n**3 + (i * n + j) * n + k``.
    """

    def __init__(self, d: np.ndarray):
        n = d.shape[0]
        self.n = n
        iu, ju = np.triu_indices(n, k=1)
        self.values, inv = np.unique(d[iu, ju], return_inverse=True)
        rank = np.zeros((n, n), dtype=np.int64)
        rank[iu, ju] = inv
        rank[ju, iu] = inv
        self.rank = rank
        keys = inv.astype(np.int64) * (n * n) + iu * n + ju
        order = np.argsort(keys, kind="stable")
        self.edges_i = iu[order]
        self.edges_j = ju[order]
        self.edges_rank = inv[order].astype(np.int64)

    def coboundary(self, i: int, j: int, max_rank: int | None) -> np.ndarray:
        n = self.n
        k = np.arange(n, dtype=np.int64)
        k = k[(k != i) & (k != j)]
        r = np.maximum(np.maximum(self.rank[i, k], self.rank[j, k]), self.rank[i, j])
        if max_rank is not None:
            keep = r <= max_rank
            k, r = k[keep], r[keep]
        lo = np.minimum(k, i)
        hi = np.maximum(k, j)
        mid = i + j + k - lo - hi
        return r * n**3 + (lo * n + mid) * n + hi

    def earliest_cofaces(self, edges: np.ndarray, max_rank: int | None) -> np.ndarray:
        """Smallest coboundary key of each edge (``_NO_COFACE`` if none), in chunks."""
        n = self.n
        out = np.empty(len(edges), dtype=np.int64)
        k = np.arange(n, dtype=np.int64)[None, :]
        step = max(1, (1 << 21) // n)
        for start in range(0, len(edges), step):
            e = edges[start:start + step]
            i = self.edges_i[e][:, None]
            j = self.edges_j[e][:, None]
            r = np.maximum(np.maximum(self.rank[i[:, 0]], self.rank[j[:, 0]]),
                           self.edges_rank[e][:, None])
            lo = np.minimum(k, i)
            hi = np.maximum(k, j)
            key = r * n**3 + (lo * n + (i + j + k - lo - hi)) * n + hi
            invalid = (k == i) | (k == j)
            if max_rank is not None:
                invalid |= r > max_rank
            key[invalid] = _NO_COFACE
            out[start:start + step] = key.min(axis=1)
        return out

    def triangle_value(self, key: int) -> float:
        return float(self.values[key // self.n**3])


def rips_persistence(dist, max_scale: float | None = None) -> PersistenceDiagram:
    """Persistence diagram (dimensions 0 and 1) of the Rips filtration of ``dist``.

    Parameters
    ----------
    dist : array_like, shape (n, n)
        Symmetric, nonnegative, zero-diagonal distance matrix, n >= 1.
    max_scale : float, optional
        Truncate the filtration at this diameter.  Classes alive at the cap
        are reported with infinite death.  The default is the full
        filtration, in which exactly one dimension-0 bar is infinite and
        every loop dies.

    Returns
    -------
    PersistenceDiagram
        Dimension-0 bars all have birth 0; one bar per vertex.  Dimension-1
        bars of zero length are omitted.
    """
    d = validate_distance_matrix(dist)
    n = d.shape[0]
    if n == 0:
        raise ValidationError("distance matrix must have at least one vertex")
    if n == 1:
        return PersistenceDiagram(_as_bars([(0.0, math.inf)]), _as_bars([]))

    ranked = _Ranked(d)
    max_rank = None
    if max_scale is not None:
        max_rank = int(np.searchsorted(ranked.values, max_scale, side="right")) - 1

    # dimension 0: Kruskal sweep; merging edges are cleared from dimension 1
    parent = list(range(n))
    dim0: list[tuple[float, float]] = []
    to_reduce: list[int] = []
    for e, (i, j, r) in enumerate(zip(ranked.edges_i.tolist(), ranked.edges_j.tolist(),
                                      ranked.edges_rank.tolist())):
        if max_rank is not None and r > max_rank:
            break
        ri, rj = _find(parent, i), _find(parent, j)
        if ri == rj:
            to_reduce.append(e)
        else:
            parent[max(ri, rj)] = min(ri, rj)
            dim0.append((0.0, float(ranked.values[r])))
    n_components = sum(1 for v in range(n) if _find(parent, v) == v)
    dim0.extend([(0.0, math.inf)] * n_components)

    # dimension 1: cohomology, reverse filtration order
    owner: dict[int, int] = {}
    reduced: dict[int, set[int]] = {}
    dim1: list[tuple[float, float]] = []

    def column(e: int) -> set[int]:
        if e in reduced:
            return reduced[e]
        return set(ranked.coboundary(int(ranked.edges_i[e]), int(ranked.edges_j[e]),
                                     max_rank).tolist())

    order = np.array(to_reduce[::-1], dtype=np.int64)
    earliest = ranked.earliest_cofaces(order, max_rank).tolist()
    for e, pivot in zip(order.tolist(), earliest):
        birth = float(ranked.values[ranked.edges_rank[e]])
        if pivot == _NO_COFACE:
            dim1.append((birth, math.inf))
            continue
        if pivot in owner:
            col = column(e)
            while pivot in owner:
                col ^= column(owner[pivot])
                if not col:
                    break
                pivot = min(col)
            if not col:
                dim1.append((birth, math.inf))
                continue
            reduced[e] = col
        owner[pivot] = e
        death = ranked.triangle_value(pivot)
        if death > birth:
            dim1.append((birth, death))

    dim0.sort(key=lambda bar: bar[1])
    dim1.sort()
    return PersistenceDiagram(_as_bars(dim0), _as_bars(dim1))


def betti_at_scale(dist, scale: float) -> tuple[int, int]:
    """Numbers of components and loops of the Rips complex at ``scale``."""
    if scale < 0:
        raise ValueError(f"scale must be nonnegative, got {scale}")
    # truncating at the scale keeps exactly the bars that matter
    return rips_persistence(dist, max_scale=scale).betti(scale)
