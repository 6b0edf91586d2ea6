"""Linear classifiers over topological features, probability stacking and metrics.

Every label is its own binary problem (one-vs-rest over a multilabel target).
Models are logistic regressions on standardised features; the ensemble
stacks the logits of two probability sources and fits one more logistic
regression per label.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit
from sklearn.linear_model import LogisticRegression

__all__ = [
    "FeatureMatrix",
    "LinearConfig",
    "LinearModel",
    "EnsembleModel",
    "EvalReport",
    "provenance",
    "train_linear",
    "ensemble_combine",
    "evaluate",
    "evaluate_probabilities",
    "read_probabilities",
    "write_probabilities",
]

MODEL_FORMAT = "textopo-linear-model 1"
_PROBA_EPS = 1e-12


def provenance(column: str) -> str:
    if column.startswith("tp1_"):
        return "TP1"
    if column.startswith("tp2_"):
        return "TP2"
    return "external"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


@dataclass
class FeatureMatrix:
    ids: list[str]
    columns: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.ids), len(self.columns))
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("feature column names must be unique")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("feature row ids must be unique")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix contains missing or non-finite values")

    @property
    def provenance(self) -> list[str]:
        return [provenance(c) for c in self.columns]

    def select(self, tags: Sequence[str]) -> "FeatureMatrix":
        keep = [k for k, c in enumerate(self.columns) if provenance(c) in tags]
        if not keep:
            raise ValueError(f"no feature columns tagged {', '.join(tags)}")
        return FeatureMatrix(list(self.ids), [self.columns[k] for k in keep],
                             self.values[:, keep])

    def rows(self, ids: Sequence[str]) -> np.ndarray:
        pos = {i: k for k, i in enumerate(self.ids)}
        missing = [i for i in ids if i not in pos]
        if missing:
            raise KeyError(f"{len(missing)} id(s) have no feature row, e.g. {missing[0]!r}")
        return self.values[[pos[i] for i in ids]]

    def to_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as handle:
            handle.write(self.to_csv_string())

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", *self.columns])
        for doc_id, row in zip(self.ids, self.values):
            writer.writerow([doc_id, *(_fmt(v) for v in row)])
        return buf.getvalue()

    @classmethod
    def read_csv(cls, path) -> "FeatureMatrix":
        with Path(path).open(encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if not header or header[0] != "id":
                raise ValueError(f"{path}: first column must be 'id'")
            ids, rows = [], []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, "
                                     f"got {len(row)}")
                try:
                    rows.append([float(v) for v in row[1:]])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
                ids.append(row[0])
        return cls(ids, header[1:], np.array(rows, dtype=float).reshape(len(ids), len(header) - 1))


@dataclass(frozen=True)
class LinearConfig:
    """Logistic regression settings.  ``C`` is the inverse L2 strength."""

    C: float = 1.0
    max_iter: int = 5000
    tol: float = 1e-10
    seed: int = 0


@dataclass
class LinearModel:
    """Per-class logistic regressions on standardised inputs."""

    classes: tuple[str, ...]
    feature_names: tuple[str, ...]
    mean: np.ndarray
    scale: np.ndarray
    coef: np.ndarray  # (n_classes, n_features)
    intercept: np.ndarray  # (n_classes,)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} feature columns, "
                             f"got shape {X.shape}")
        Z = (X - self.mean) / self.scale
        return Z @ self.coef.T + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def save(self, path) -> None:
        lines = [MODEL_FORMAT,
                 "classes\t" + "\t".join(self.classes),
                 "features\t" + "\t".join(self.feature_names),
                 "mean\t" + "\t".join(map(repr, self.mean.tolist())),
                 "scale\t" + "\t".join(map(repr, self.scale.tolist())),
                 "intercept\t" + "\t".join(map(repr, self.intercept.tolist()))]
        for c, row in zip(self.classes, self.coef):
            lines.append(f"coef:{c}\t" + "\t".join(map(repr, row.tolist())))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "LinearModel":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != MODEL_FORMAT:
            raise ValueError(f"{path}: not a {MODEL_FORMAT!r} file")
        fields = {}
        for line in lines[1:]:
            key, _, rest = line.partition("\t")
            fields[key] = rest.split("\t") if rest else []
        classes = tuple(fields["classes"])
        floats = lambda key: np.array([float(v) for v in fields[key]])  # noqa: E731
        coef = np.array([floats(f"coef:{c}") for c in classes]).reshape(len(classes), -1)
        return cls(classes, tuple(fields["features"]), floats("mean"), floats("scale"),
                   coef, floats("intercept"))


def _check_labels(Y, n_rows: int, classes: Sequence[str]) -> np.ndarray:
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape != (n_rows, len(classes)):
        raise ValueError(f"labels have shape {Y.shape}, expected ({n_rows}, {len(classes)})")
    if not np.isin(Y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return Y.astype(int)


def _fit(Z: np.ndarray, Y: np.ndarray, classes: Sequence[str], config: LinearConfig):
    coef = np.zeros((len(classes), Z.shape[1]))
    intercept = np.zeros(len(classes))
    for k, name in enumerate(classes):
        y = Y[:, k]
        if y.min() == y.max():
            raise ValueError(f"class {name!r} has only {'positive' if y[0] else 'negative'} "
                             "training labels")
        n_pos = int(y.sum())
        if min(n_pos, len(y) - n_pos) < 10:
            warnings.warn(f"class {name!r} has fewer than 10 training rows on one side "
                          f"({n_pos} positive of {len(y)})", stacklevel=3)
        clf = LogisticRegression(C=config.C, max_iter=config.max_iter, tol=config.tol,
                                 solver="lbfgs", random_state=config.seed)
        clf.fit(Z, y)
        coef[k] = clf.coef_[0]
        intercept[k] = clf.intercept_[0]
    return coef, intercept


def train_linear(X, Y, classes: Sequence[str], feature_names: Sequence[str] | None = None,
                 config: LinearConfig | None = None) -> LinearModel:
    """One-vs-rest logistic regression per class on standardised features.

    Standardisation uses the training mean and standard deviation; constant
    columns are centred but not scaled.  Raises ``ValueError`` naming any
    class whose training labels are all equal.
    """
    config = config or LinearConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError(f"feature matrix must be 2-D and nonempty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    classes = tuple(classes)
    Y = _check_labels(Y, len(X), classes)
    names = tuple(feature_names) if feature_names is not None else tuple(
        f"f{k + 1}" for k in range(X.shape[1]))
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 1e-12 * np.maximum(1.0, np.abs(mean)), scale, 1.0)
    coef, intercept = _fit((X - mean) / scale, Y, classes, config)
    return LinearModel(classes, names, mean, scale, coef, intercept)


def _logits(P: np.ndarray) -> np.ndarray:
    P = np.clip(P, _PROBA_EPS, 1 - _PROBA_EPS)
    return np.log(P) - np.log1p(-P)


@dataclass
class EnsembleModel:
    """Logistic regression over the stacked logits of two probability sources."""

    stacker: LinearModel

    @property
    def classes(self) -> tuple[str, ...]:
        return self.stacker.classes

    def predict_proba(self, proba_a, proba_b) -> np.ndarray:
        return self.stacker.predict_proba(_stack(proba_a, proba_b, len(self.classes)))


def _stack(proba_a, proba_b, n_classes: int) -> np.ndarray:
    A = np.asarray(proba_a, dtype=float)
    B = np.asarray(proba_b, dtype=float)
    if A.ndim != 2 or A.shape != B.shape:
        raise ValueError(f"probability matrices are misaligned: {A.shape} vs {B.shape}")
    if A.shape[1] != n_classes:
        raise ValueError(f"expected {n_classes} class columns, got {A.shape[1]}")
    for name, P in (("proba_a", A), ("proba_b", B)):
        if not (np.all(np.isfinite(P)) and P.min(initial=0) >= 0 and P.max(initial=0) <= 1):
            raise ValueError(f"{name} must hold probabilities in [0, 1]")
    return np.hstack([_logits(A), _logits(B)])


def ensemble_combine(proba_a, proba_b, labels, classes: Sequence[str],
                     config: LinearConfig | None = None) -> EnsembleModel:
    """Fit the stacking model on training-split probabilities and labels.

    Each class gets a logistic regression over all ``2 * n_classes`` logit
    columns.  Logits rather than raw probabilities keep the identity map
    (reproduce one source unchanged) inside the model family.
    """
    classes = tuple(classes)
    config = config or LinearConfig(C=1e4)
    Z = _stack(proba_a, proba_b, len(classes))
    names = [f"a:{c}" for c in classes] + [f"b:{c}" for c in classes]
    return EnsembleModel(train_linear(Z, labels, classes, names, config))


@dataclass
class EvalReport:
    classes: tuple[str, ...]
    accuracy: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    n_rows: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def macro(self) -> dict[str, float]:
        return {"precision": float(self.precision.mean()), "recall": float(self.recall.mean()),
                "f1": float(self.f1.mean()), "accuracy": float(self.accuracy.mean())}

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class", "accuracy", "precision", "recall", "f1"])
        for k, c in enumerate(self.classes):
            writer.writerow([c, _fmt(self.accuracy[k]), _fmt(self.precision[k]),
                             _fmt(self.recall[k]), _fmt(self.f1[k])])
        m = self.macro
        writer.writerow(["macro", _fmt(m["accuracy"]), _fmt(m["precision"]),
                         _fmt(m["recall"]), _fmt(m["f1"])])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_string(), encoding="utf-8")

    def table(self) -> str:
        head = f"{'class':<10} {'acc':>7} {'prec':>7} {'rec':>7} {'f1':>7}"
        out = [head, "-" * len(head)]
        rows = list(zip(self.classes, self.accuracy, self.precision, self.recall, self.f1))
        m = self.macro
        rows.append(("macro", m["accuracy"], m["precision"], m["recall"], m["f1"]))
        for name, *vals in rows:
            out.append(f"{name:<10} " + " ".join(f"{v:7.3f}" for v in vals))
        return "\n".join(out)


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(len(num), dtype=float)
    np.divide(num, den, out=out, where=den > 0)
    return out


def evaluate_probabilities(proba, labels, classes: Sequence[str],
                           threshold: float = 0.5) -> EvalReport:
    """Per-class binary metrics at ``threshold``; zero denominators give 0."""
    classes = tuple(classes)
    P = np.asarray(proba, dtype=float)
    if len(P) == 0:
        raise ValueError("no rows to evaluate")
    Y = _check_labels(labels, len(P), classes)
    if P.ndim == 1:
        P = P[:, None]
    pred = (P >= threshold).astype(int)
    tp = ((pred == 1) & (Y == 1)).sum(axis=0)
    fp = ((pred == 1) & (Y == 0)).sum(axis=0)
    fn = ((pred == 0) & (Y == 1)).sum(axis=0)
    accuracy = (pred == Y).mean(axis=0)
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return EvalReport(classes, accuracy, precision, recall, f1, n_rows=len(P))


def evaluate(model: LinearModel, features, labels, threshold: float = 0.5) -> EvalReport:
    return evaluate_probabilities(model.predict_proba(features), labels, model.classes,
                                  threshold)


def write_probabilities(path, ids: Sequence[str], proba, classes: Sequence[str]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", *classes])
        for doc_id, row in zip(ids, np.asarray(proba)):
            writer.writerow([doc_id, *(_fmt(v) for v in row)])


def read_probabilities(path, classes: Sequence[str]) -> dict[str, np.ndarray]:
    """Map id -> probability row (columns reordered to ``classes``)."""
    with Path(path).open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = [c for c in ("id", *classes) if c not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f"{path}: missing column(s) {', '.join(missing)}")
        out = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                vals = np.array([float(row[c]) for c in classes])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if not (np.all(np.isfinite(vals)) and vals.min() >= 0 and vals.max() <= 1):
                raise ValueError(f"{path}:{lineno}: probabilities must lie in [0, 1]")
            if row["id"] in out:
                raise ValueError(f"{path}:{lineno}: duplicate id {row['id']!r}")
            out[row["id"]] = vals
    return out
