"""Tokenisation, word2vec-text embedding files and the labelled corpus CSV."""

from __future__ import annotations

import csv
import logging
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GENRES",
    "EmbeddingFormatError",
    "MalformedHeaderError",
    "DimensionMismatchError",
    "EmbeddingReadError",
    "CorpusFormatError",
    "EmptyDocumentError",
    "EmbeddingTable",
    "Document",
    "LabeledCorpus",
    "tokenize",
    "load_embeddings",
    "embed_document",
    "load_corpus",
    "assign_split",
    "load_stoplist",
]

logger = logging.getLogger(__name__)

GENRES = ("drama", "comedy", "action", "romance")

_TOKEN = re.compile(r"[^\W_]+")


class EmbeddingFormatError(ValueError):
    """Base class for problems with an embedding file; ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)
        self.lineno = lineno


class MalformedHeaderError(EmbeddingFormatError):
    pass


class DimensionMismatchError(EmbeddingFormatError):
    pass


class EmbeddingReadError(EmbeddingFormatError):
    pass


class CorpusFormatError(ValueError):
    pass


class EmptyDocumentError(ValueError):
    """No token of the document has an embedding."""


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class EmbeddingTable:
    index: dict[str, int]
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[self.index[token]]


def load_embeddings(path) -> EmbeddingTable:
    """Read a word2vec text file: a ``V D`` header, then ``token x1 ... xD`` rows.

    Duplicate tokens keep their first vector (with a warning).  Header,
    row-width and row-count problems raise subclasses of
    ``EmbeddingFormatError`` carrying the line number.
    """
    path = Path(path)
    try:
        handle = path.open(encoding="utf-8")
    except OSError as exc:
        raise EmbeddingReadError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with handle:
        try:
            header = handle.readline()
        except (OSError, UnicodeDecodeError) as exc:
            raise EmbeddingReadError(f"cannot read {path}: {exc}", 1) from exc
        parts = header.split()
        try:
            if len(parts) != 2:
                raise ValueError
            V, D = int(parts[0]), int(parts[1])
        except ValueError:
            raise MalformedHeaderError(
                f"expected header 'vocab_size dim', got {header.strip()!r}", 1) from None
        if V < 0 or D < 1:
            raise MalformedHeaderError(f"invalid header sizes V={V}, D={D}", 1)

        index: dict[str, int] = {}
        vectors = np.empty((V, D))
        rows = 0
        lineno = 1
        try:
            for lineno, line in enumerate(handle, start=2):
                if not line.strip():
                    continue
                fields = line.rstrip("\r\n").split()
                token, values = fields[0], fields[1:]
                if rows >= V:
                    raise EmbeddingFormatError(f"more rows than the {V} declared in the header",
                                               lineno)
                if len(values) != D:
                    raise DimensionMismatchError(
                        f"token {token!r} has {len(values)} values, expected {D}", lineno)
                try:
                    vec = [float(v) for v in values]
                except ValueError as exc:
                    raise EmbeddingFormatError(f"bad number for token {token!r}: {exc}",
                                               lineno) from None
                rows += 1
                if token in index:
                    warnings.warn(f"{path}:{lineno}: duplicate token {token!r}; "
                                  "keeping the first vector", stacklevel=2)
                    continue
                vectors[len(index)] = vec
                index[token] = len(index)
        except UnicodeDecodeError as exc:
            raise EmbeddingReadError(f"cannot decode {path}: {exc}", lineno + 1) from exc
        if rows < V:
            raise EmbeddingFormatError(f"header declares {V} rows but the file has {rows}",
                                       lineno)
    vectors = vectors[:len(index)].copy()
    vectors.setflags(write=False)
    return EmbeddingTable(index, vectors)


def embed_document(tokens: Iterable[str], table: EmbeddingTable) -> np.ndarray:
    """Stack the vectors of the in-vocabulary tokens, in order; unknown tokens are skipped."""
    rows = [table.index[t] for t in tokens if t in table.index]
    if not rows:
        raise EmptyDocumentError("none of the document's tokens has an embedding")
    return table.vectors[rows]


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    labels: frozenset[str]
    split: str = "train"

    @property
    def tokens(self) -> list[str]:
        return tokenize(self.text)


@dataclass
class LabeledCorpus:
    documents: list[Document]
    classes: tuple[str, ...] = GENRES
    seed: int = 0
    _by_id: dict[str, Document] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_id = {d.id: d for d in self.documents}

    def __len__(self) -> int:
        return len(self.documents)

    def __getitem__(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def ids_for(self, split: str) -> list[str]:
        return [d.id for d in self.documents if d.split == split]

    def label_matrix(self, ids: Sequence[str] | None = None) -> np.ndarray:
        """0/1 matrix with one column per class, rows in ``ids`` order."""
        ids = self.ids if ids is None else ids
        return np.array([[c in self._by_id[i].labels for c in self.classes] for i in ids],
                        dtype=int).reshape(len(ids), len(self.classes))


def assign_split(n: int, seed: int, train_fraction: float = 2 / 3) -> list[str]:
    """Seeded train/test assignment of ``n`` items; ``round(n * train_fraction)`` train."""
    n_train = int(round(n * train_fraction))
    order = np.random.default_rng(seed).permutation(n)
    split = ["test"] * n
    for k in order[:n_train]:
        split[int(k)] = "train"
    return split


def load_corpus(path, min_tokens: int = 200, seed: int = 0, label_delimiter: str = "|",
                classes: Sequence[str] = GENRES,
                train_fraction: float = 2 / 3) -> LabeledCorpus:
    """Load an ``id,text,labels`` CSV, filter short documents and split train/test.

    Labels outside ``classes`` are ignored with a warning; a document left
    with no known label is dropped.  The split is drawn after filtering.
    """
    path = Path(path)
    classes = tuple(c.lower() for c in classes)
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = {"id", "text", "labels"} - set(reader.fieldnames or ())
        if missing:
            raise CorpusFormatError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        kept: list[tuple[str, str, frozenset[str]]] = []
        seen: set[str] = set()
        unknown: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            doc_id = (row["id"] or "").strip()
            if doc_id in seen:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate id {doc_id!r}")
            seen.add(doc_id)
            raw = [x.strip().lower() for x in (row["labels"] or "").split(label_delimiter)]
            raw = [x for x in raw if x]
            if not raw:
                raise CorpusFormatError(f"{path}:{lineno}: empty label field for id {doc_id!r}")
            labels = frozenset(x for x in raw if x in classes)
            unknown.update(x for x in raw if x not in classes)
            if not labels:
                continue
            text = row["text"] or ""
            if len(tokenize(text)) < min_tokens:
                continue
            kept.append((doc_id, text, labels))
    if unknown:
        warnings.warn(f"{path}: ignoring labels outside {classes}: {sorted(unknown)}",
                      stacklevel=2)
    split = assign_split(len(kept), seed, train_fraction)
    docs = [Document(i, t, lab, s) for (i, t, lab), s in zip(kept, split)]
    logger.info("loaded %d documents from %s (%d train)", len(docs), path,
                split.count("train"))
    return LabeledCorpus(docs, classes, seed)


def load_stoplist(path) -> set[str]:
    """One stop word per line (tokenised the same way as documents)."""
    with Path(path).open(encoding="utf-8") as handle:
        return {tok for line in handle for tok in tokenize(line)}
