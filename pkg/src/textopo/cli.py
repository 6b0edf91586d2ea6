"""Command-line interface: ``textopo {ph,extract,train-eval,split}``.

Exit codes: 0 success, 1 parse error, 2 validation error, 3 too many
documents failed during extraction.  Inputs are checked before any output
file is opened, so a failed run leaves no partial artifacts.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from textopo.embed_topo import SMOOTHING_MODES, embedding_topo_features
from textopo.evaluation import (
    FeatureMatrix,
    LinearConfig,
    ensemble_combine,
    evaluate_probabilities,
    read_probabilities,
    train_linear,
    write_probabilities,
)
from textopo.ingest import (
    CorpusFormatError,
    EmbeddingFormatError,
    embed_document,
    load_corpus,
    load_embeddings,
    load_stoplist,
    tokenize,
)
from textopo.ph import ValidationError, rips_persistence
from textopo.tfidf_topo import DEFAULT_BLOCKS, tfidf_topo_features

logger = logging.getLogger("textopo")

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_PARTIAL = 0, 1, 2, 3

FEATURE_SETS = {"tp1": ("TP1",), "tp2": ("TP2",), "tp1+tp2": ("TP1", "TP2")}


class ParseError(ValueError):
    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def read_distance_matrix(path) -> np.ndarray:
    """Parse ``n`` on the first line followed by ``n`` rows of ``n`` numbers."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    numbered = [(k, line) for k, line in enumerate(lines, start=1) if line.strip()]
    if not numbered:
        raise ParseError("empty file, expected the vertex count", 1)
    lineno, first = numbered[0]
    try:
        n = int(first.strip())
    except ValueError:
        raise ParseError(f"expected the vertex count, got {first.strip()!r}", lineno) from None
    if n < 1:
        raise ParseError(f"vertex count must be positive, got {n}", lineno)
    rows = numbered[1:]
    if len(rows) != n:
        raise ParseError(f"expected {n} matrix rows, found {len(rows)}",
                         rows[-1][0] if rows else lineno)
    out = np.empty((n, n))
    for r, (lineno, line) in enumerate(rows):
        parts = line.split()
        if len(parts) != n:
            raise ParseError(f"expected {n} values, got {len(parts)}", lineno)
        try:
            out[r] = [float(v) for v in parts]
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return out


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"{what} not found: {path}")
    return p


def _require_out(path: str) -> Path:
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir():
        raise CliError(f"output directory does not exist: {parent}")
    return p


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def cmd_ph(args) -> int:
    src = _require_file(args.matrix, "distance matrix")
    out = _require_out(args.output)
    try:
        dist = read_distance_matrix(src)
    except ParseError as exc:
        raise CliError(f"{src}: {exc}", EXIT_PARSE) from None
    try:
        diagram = rips_persistence(dist, max_scale=args.max_scale)
    except ValidationError as exc:
        raise CliError(f"{src}: {exc}", EXIT_VALIDATION) from None
    _write(out, "\n".join(diagram.lines()) + "\n")
    return EXIT_OK


def _extract_one(doc, table, args, stoplist):
    tokens = tokenize(doc.text)
    if stoplist:
        tokens = [t for t in tokens if t not in stoplist]
    row = []
    if args.mode in ("tp1", "both"):
        psi = embed_document(tokens, table)
        row.extend(embedding_topo_features(psi, p=args.wasserstein_p,
                                           smoothing=args.smoothing).vector)
    if args.mode in ("tp2", "both"):
        row.extend(tfidf_topo_features(tokens, args.blocks).vector)
    return row


def feature_columns(mode: str, dim: int | None, blocks: int) -> list[str]:
    cols = []
    if mode in ("tp1", "both"):
        cols += [f"tp1_omega0_{d}" for d in range(1, dim + 1)]
        cols += [f"tp1_omega1_{d}" for d in range(1, dim + 1)]
    if mode in ("tp2", "both"):
        cols += [f"tp2_x{k}" for k in range(1, blocks)]
        cols += [f"tp2_y{k}" for k in range(1, 6)]
    return cols


def _load_corpus(args):
    path = _require_file(args.corpus, "corpus")
    try:
        return load_corpus(path, min_tokens=args.min_tokens, seed=args.seed,
                           label_delimiter=args.label_delimiter)
    except CorpusFormatError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None


def cmd_extract(args) -> int:
    needs_embeddings = args.mode in ("tp1", "both")
    if needs_embeddings and not args.embeddings:
        raise CliError(f"--embeddings is required for mode {args.mode}")
    if args.blocks < 2:
        raise CliError("--blocks must be at least 2")
    if args.wasserstein_p < 1:
        raise CliError("--wasserstein-p must be >= 1")
    emb_path = _require_file(args.embeddings, "embeddings") if needs_embeddings else None
    stop_path = _require_file(args.stoplist, "stop list") if args.stoplist else None
    out = _require_out(args.output)
    corpus = _load_corpus(args)
    table = None
    if emb_path is not None:
        try:
            table = load_embeddings(emb_path)
        except EmbeddingFormatError as exc:
            raise CliError(f"{emb_path}: {exc}", EXIT_PARSE) from None
        if table.dim < 3:
            raise CliError(f"embedding dimension {table.dim} is below the minimum of 3")
    stoplist = load_stoplist(stop_path) if stop_path else None

    def run(doc):
        try:
            return _extract_one(doc, table, args, stoplist)
        except ValueError as exc:
            logger.warning("skipping document %s: %s", doc.id, exc)
            return None

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(run, corpus.documents))
    else:
        results = [run(doc) for doc in corpus.documents]

    ids = [doc.id for doc, row in zip(corpus.documents, results) if row is not None]
    rows = [row for row in results if row is not None]
    skipped = len(results) - len(rows)
    if skipped:
        logger.warning("skipped %d of %d documents", skipped, len(results))
    if results and skipped / len(results) > args.max_skip_fraction:
        raise CliError(f"{skipped} of {len(results)} documents failed, above the "
                       f"--max-skip-fraction of {args.max_skip_fraction}", EXIT_PARTIAL)
    cols = feature_columns(args.mode, table.dim if table else None, args.blocks)
    features = FeatureMatrix(ids, cols, np.array(rows, dtype=float).reshape(len(ids), len(cols)))
    _write(out, features.to_csv_string())
    return EXIT_OK


def cmd_train_eval(args) -> int:
    feat_path = _require_file(args.features, "feature file")
    ext_path = None
    if args.feature_set == "ensemble":
        if not args.external_proba:
            raise CliError("--external-proba is required for the ensemble feature set")
        ext_path = _require_file(args.external_proba, "external probabilities")
    out = _require_out(args.output)
    extra_outs = [_require_out(p) for p in (args.model_out, args.proba_out) if p]
    corpus = _load_corpus(args)
    try:
        features = FeatureMatrix.read_csv(feat_path)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None

    corpus_ids = set(corpus.ids)
    stray = [i for i in features.ids if i not in corpus_ids]
    if stray:
        raise CliError(f"{len(stray)} feature row(s) have no corpus document, e.g. {stray[0]!r}")
    have = set(features.ids)
    missing = [i for i in corpus.ids if i not in have]
    if missing:
        logger.warning("%d corpus document(s) have no feature row and are left out",
                       len(missing))
    train_ids = [i for i in corpus.ids_for("train") if i in have]
    test_ids = [i for i in corpus.ids_for("test") if i in have]
    if not train_ids or not test_ids:
        raise CliError("train and test splits must both be nonempty")

    base_set = args.base_set if args.feature_set == "ensemble" else args.feature_set
    try:
        selected = features.select(FEATURE_SETS[base_set])
    except ValueError as exc:
        raise CliError(str(exc)) from None
    config = LinearConfig(C=args.C, seed=args.seed)
    classes = corpus.classes
    y_train = corpus.label_matrix(train_ids)
    y_test = corpus.label_matrix(test_ids)
    try:
        model = train_linear(selected.rows(train_ids), y_train, classes,
                             selected.columns, config)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    p_train = model.predict_proba(selected.rows(train_ids))
    p_test = model.predict_proba(selected.rows(test_ids))

    if ext_path is not None:
        try:
            external = read_probabilities(ext_path, classes)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_PARSE) from None
        absent = [i for i in train_ids + test_ids if i not in external]
        if absent:
            raise CliError(f"{len(absent)} document(s) lack external probabilities, "
                           f"e.g. {absent[0]!r}")
        e_train = np.array([external[i] for i in train_ids])
        e_test = np.array([external[i] for i in test_ids])
        try:
            ens = ensemble_combine(p_train, e_train, y_train, classes,
                                   LinearConfig(C=args.ensemble_C, seed=args.seed))
        except ValueError as exc:
            raise CliError(str(exc)) from None
        report = evaluate_probabilities(ens.predict_proba(p_test, e_test), y_test, classes)
    else:
        report = evaluate_probabilities(p_test, y_test, classes)

    _write(out, report.to_csv_string())
    if args.model_out:
        model.save(extra_outs[0])
    if args.proba_out:
        all_ids = train_ids + test_ids
        write_probabilities(extra_outs[-1], all_ids, np.vstack([p_train, p_test]), classes)
    print(report.table())
    return EXIT_OK


def cmd_split(args) -> int:
    out = _require_out(args.output)
    corpus = _load_corpus(args)
    lines = ["id,split"] + [f"{d.id},{d.split}" for d in corpus.documents]
    _write(out, "\n".join(lines) + "\n")
    return EXIT_OK


def _add_corpus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="CSV with id,text,labels columns")
    p.add_argument("--min-tokens", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label-delimiter", default="|")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="textopo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ph", help="persistence diagram of a distance matrix")
    p.add_argument("matrix")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--max-scale", type=float, default=None)
    p.set_defaults(func=cmd_ph)

    p = sub.add_parser("extract", help="TP1/TP2 features for every document")
    _add_corpus_flags(p)
    p.add_argument("--embeddings", help="word2vec text-format vectors (needed for tp1)")
    p.add_argument("--mode", choices=("tp1", "tp2", "both"), default="both")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--blocks", type=int, default=DEFAULT_BLOCKS)
    p.add_argument("--wasserstein-p", type=float, default=1.0)
    p.add_argument("--smoothing", choices=SMOOTHING_MODES, default="truncate")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--stoplist")
    p.add_argument("--max-skip-fraction", type=float, default=0.1,
                   help="fail with exit code 3 if more documents than this fraction fail")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train-eval", help="train on the train split, report on the test split")
    _add_corpus_flags(p)
    p.add_argument("--features", required=True)
    p.add_argument("--feature-set", choices=(*FEATURE_SETS, "ensemble"), default="tp1+tp2")
    p.add_argument("--base-set", choices=tuple(FEATURE_SETS), default="tp1+tp2",
                   help="features of the linear model stacked in the ensemble")
    p.add_argument("--external-proba", help="CSV of id plus one probability column per class")
    p.add_argument("-o", "--output", required=True, help="EvalReport CSV")
    p.add_argument("--model-out")
    p.add_argument("--proba-out", help="write the linear model's probabilities for all rows")
    p.add_argument("--C", type=float, default=1.0, help="inverse L2 strength")
    p.add_argument("--ensemble-C", type=float, default=1e4)
    p.set_defaults(func=cmd_train_eval)

    p = sub.add_parser("split", help="write the seeded train/test assignment")
    _add_corpus_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_split)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"textopo {args.command}: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
