"""Sparse bag-of-words corpora with attached responses.

Two line-oriented text formats are supported:

* ``svmlight-counts`` -- one document per line,
  ``<label> <termIdx>:<count> ...``, whitespace separated, ``#`` starts
  a comment.  Label syntax depends on the task: ``+1``/``-1`` for
  binary, a non-negative integer for multiclass, a comma-separated list
  of non-negative integers for multilabel, and a decimal score for
  regression.
* ``uci-bow`` -- three header lines ``D``, ``V``, ``NNZ`` followed by
  ``docId termId count`` triples with 1-based ids (converted to
  0-based).  This format carries no labels; the loaded corpus is
  unlabeled and suited to the unsupervised baseline.

A loaded corpus is immutable in practice: loaders build everything up
front and nothing in the package mutates documents or responses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .randkit import RngState

__all__ = [
    "TASK_KINDS",
    "CorpusFormatError",
    "VocabMap",
    "Document",
    "LabeledCorpus",
    "ValidationReport",
    "load_bow",
    "save_svmlight",
    "train_test_split",
    "validate",
]

TASK_KINDS = ("binary", "multiclass", "multilabel", "regression")


class CorpusFormatError(ValueError):
    """Raised for malformed corpus files; carries the offending line number."""


@dataclass(frozen=True)
class VocabMap:
    """Ordered vocabulary; indices are dense in [0, size)."""

    terms: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.terms)) != len(self.terms):
            raise ValueError("vocabulary terms must be unique")

    @property
    def size(self) -> int:
        return len(self.terms)

    @classmethod
    def synthetic(cls, v: int) -> "VocabMap":
        return cls(tuple(f"t{i}" for i in range(v)))


@dataclass(frozen=True)
class Document:
    """Token sequence of term indices; repeated terms appear repeatedly."""

    doc_id: int
    tokens: np.ndarray  # int32, each in [0, V)

    def __len__(self) -> int:
        return int(self.tokens.size)


@dataclass(frozen=True)
class LabeledCorpus:
    """Documents plus per-document responses of one consistent variant.

    ``responses`` holds ints in {-1,+1} (binary), category ints
    (multiclass), frozensets of category ints (multilabel), or floats
    (regression); it is None for unlabeled corpora.
    """

    vocab: VocabMap
    docs: tuple[Document, ...]
    responses: tuple | None
    task: str | None

    def __post_init__(self):
        if self.task is not None and self.task not in TASK_KINDS:
            raise ValueError(f"unknown task kind: {self.task!r}")
        if self.responses is not None and len(self.responses) != len(self.docs):
            raise ValueError("document and response counts differ")

    @property
    def D(self) -> int:
        return len(self.docs)

    @property
    def n_total(self) -> int:
        return sum(len(d) for d in self.docs)

    def tokens_list(self) -> list[np.ndarray]:
        return [d.tokens for d in self.docs]


@dataclass
class ValidationReport:
    """Read-only diagnostics; an empty report means a clean corpus."""

    empty_docs: list[int] = field(default_factory=list)
    out_of_range: list[tuple[int, int, int]] = field(default_factory=list)  # (doc_id, pos, token)
    label_issues: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.empty_docs or self.out_of_range or self.label_issues)


def _parse_label(token: str, task: str, lineno: int):
    try:
        if task == "binary":
            if token == "+1":
                return 1
            if token == "-1":
                return -1
            raise ValueError
        if task == "multiclass":
            cat = int(token)
            if cat < 0:
                raise ValueError
            return cat
        if task == "multilabel":
            cats = frozenset(int(p) for p in token.split(","))
            if any(c < 0 for c in cats):
                raise ValueError
            return cats
        if task == "regression":
            return float(token)
    except ValueError:
        pass
    raise CorpusFormatError(f"line {lineno}: unknown label token {token!r} for task {task!r}")


def _format_label(response, task: str) -> str:
    if task == "binary":
        return "+1" if response > 0 else "-1"
    if task == "multiclass":
        return str(int(response))
    if task == "multilabel":
        return ",".join(str(c) for c in sorted(response))
    return repr(float(response))


def _load_svmlight(path: str, task: str, v: int | None) -> LabeledCorpus:
    docs: list[Document] = []
    responses: list = []
    max_term = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            responses.append(_parse_label(parts[0], task, lineno))
            counts: dict[int, int] = {}
            for part in parts[1:]:
                try:
                    idx_s, cnt_s = part.split(":")
                    idx, cnt = int(idx_s), int(cnt_s)
                except ValueError:
                    raise CorpusFormatError(
                        f"line {lineno}: malformed entry {part!r} (expected termIdx:count)"
                    ) from None
                if idx < 0 or cnt <= 0:
                    raise CorpusFormatError(
                        f"line {lineno}: entry {part!r} must have index >= 0 and count >= 1"
                    )
                if v is not None and idx >= v:
                    raise CorpusFormatError(
                        f"line {lineno}: term index {idx} >= declared vocabulary size {v}"
                    )
                counts[idx] = counts.get(idx, 0) + cnt
            tokens = np.repeat(
                np.fromiter(counts.keys(), dtype=np.int32, count=len(counts)),
                np.fromiter(counts.values(), dtype=np.int64, count=len(counts)),
            ).astype(np.int32)
            if counts:
                max_term = max(max_term, max(counts))
            docs.append(Document(doc_id=len(docs), tokens=tokens))
    if not docs:
        raise CorpusFormatError("no documents")
    size = v if v is not None else max_term + 1
    return LabeledCorpus(
        vocab=VocabMap.synthetic(max(size, 0)),
        docs=tuple(docs),
        responses=tuple(responses),
        task=task,
    )


def _load_uci_bow(path: str) -> LabeledCorpus:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [(i, ln.split("#", 1)[0].strip()) for i, ln in enumerate(fh, start=1)]
    lines = [(i, ln) for i, ln in lines if ln]
    if len(lines) < 3:
        raise CorpusFormatError("no documents")
    header = []
    for lineno, ln in lines[:3]:
        try:
            header.append(int(ln))
        except ValueError:
            raise CorpusFormatError(f"line {lineno}: expected integer header, got {ln!r}") from None
    d_count, v_count, nnz = header
    if d_count <= 0:
        raise CorpusFormatError("no documents")
    per_doc: list[dict[int, int]] = [dict() for _ in range(d_count)]
    body = lines[3:]
    if len(body) != nnz:
        raise CorpusFormatError(f"expected {nnz} triples, found {len(body)}")
    for lineno, ln in body:
        parts = ln.split()
        try:
            doc_id, term_id, cnt = (int(p) for p in parts)
        except ValueError:
            raise CorpusFormatError(f"line {lineno}: malformed triple {ln!r}") from None
        if not 1 <= doc_id <= d_count:
            raise CorpusFormatError(f"line {lineno}: document id {doc_id} outside [1, {d_count}]")
        if not 1 <= term_id <= v_count:
            raise CorpusFormatError(f"line {lineno}: term index {term_id} >= declared V {v_count}")
        if cnt <= 0:
            raise CorpusFormatError(f"line {lineno}: count must be >= 1")
        bucket = per_doc[doc_id - 1]
        bucket[term_id - 1] = bucket.get(term_id - 1, 0) + cnt
    docs = []
    for i, counts in enumerate(per_doc):
        tokens = np.repeat(
            np.fromiter(counts.keys(), dtype=np.int32, count=len(counts)),
            np.fromiter(counts.values(), dtype=np.int64, count=len(counts)),
        ).astype(np.int32)
        docs.append(Document(doc_id=i, tokens=tokens))
    return LabeledCorpus(
        vocab=VocabMap.synthetic(v_count), docs=tuple(docs), responses=None, task=None
    )


def load_bow(path: str, format: str, task: str = "binary", v: int | None = None) -> LabeledCorpus:
    """Load a bag-of-words corpus.

    Args:
        path: input file.
        format: ``"svmlight-counts"`` or ``"uci-bow"``.
        task: response variant for svmlight labels (ignored for uci-bow,
            which carries no labels).
        v: declared vocabulary size; svmlight infers max index + 1 when
            omitted, and indices >= v are rejected when given.
    """
    if format == "svmlight-counts":
        if task not in TASK_KINDS:
            raise ValueError(f"unknown task kind: {task!r}")
        return _load_svmlight(path, task, v)
    if format == "uci-bow":
        return _load_uci_bow(path)
    raise ValueError(f"unknown corpus format: {format!r}")


def save_svmlight(corpus: LabeledCorpus, path: str) -> None:
    """Write a labeled corpus back to svmlight-counts text."""
    if corpus.responses is None or corpus.task is None:
        raise ValueError("cannot serialize an unlabeled corpus to svmlight-counts")
    with open(path, "w", encoding="utf-8") as fh:
        for doc, resp in zip(corpus.docs, corpus.responses):
            terms, counts = np.unique(doc.tokens, return_counts=True)
            entries = " ".join(f"{int(t)}:{int(c)}" for t, c in zip(terms, counts))
            label = _format_label(resp, corpus.task)
            fh.write(f"{label} {entries}".rstrip() + "\n")


def train_test_split(
    corpus: LabeledCorpus, test_fraction: float, seed: int
) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Deterministically partition a corpus into (train, test).

    The test part has ceil(test_fraction * D) documents, so it is never
    empty.  Both parts share the vocabulary; document ids are preserved.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    if corpus.D < 2:
        raise ValueError("need at least 2 documents to split")
    n_test = math.ceil(test_fraction * corpus.D)
    perm = RngState(seed).permutation(corpus.D)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])

    def take(idx):
        docs = tuple(corpus.docs[i] for i in idx)
        resp = tuple(corpus.responses[i] for i in idx) if corpus.responses is not None else None
        return LabeledCorpus(vocab=corpus.vocab, docs=docs, responses=resp, task=corpus.task)

    return take(train_idx), take(test_idx)


def validate(corpus: LabeledCorpus) -> ValidationReport:
    """Report empty documents, out-of-range indices, and label problems."""
    report = ValidationReport()
    v = corpus.vocab.size
    for doc in corpus.docs:
        if len(doc) == 0:
            report.empty_docs.append(doc.doc_id)
        bad = np.nonzero((doc.tokens < 0) | (doc.tokens >= v))[0]
        for pos in bad:
            report.out_of_range.append((doc.doc_id, int(pos), int(doc.tokens[pos])))
    if corpus.responses is not None:
        for i, resp in enumerate(corpus.responses):
            msg = _check_label(resp, corpus.task)
            if msg:
                report.label_issues.append((i, msg))
    return report


def _check_label(resp, task) -> str | None:
    if task == "binary":
        if not isinstance(resp, (int, np.integer)) or resp not in (-1, 1):
            return f"binary label must be -1 or +1, got {resp!r}"
    elif task == "multiclass":
        if not isinstance(resp, (int, np.integer)) or resp < 0:
            return f"multiclass label must be a non-negative int, got {resp!r}"
    elif task == "multilabel":
        if not isinstance(resp, frozenset) or any(
            not isinstance(c, (int, np.integer)) or c < 0 for c in resp
        ):
            return f"multilabel response must be a frozenset of non-negative ints, got {resp!r}"
    elif task == "regression":
        if not isinstance(resp, (float, int, np.floating, np.integer)):
            return f"regression response must be numeric, got {resp!r}"
    return None
