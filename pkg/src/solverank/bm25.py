"""Okapi BM25 inverted index over problem statements.

Serves two roles: the sparse retrieval baseline and the hard-negative miner
for contrastive training.  The IDF is the +1-smoothed variant
``ln((N - df + 0.5)/(df + 0.5) + 1)`` so scores are nonnegative for every
document frequency.

Scoring invariant: ``bm25_search`` accumulates per-posting contributions in
unique-query-token order, which is exactly how ``bm25_score`` evaluates a
single document, so index search equals brute-force full-scan scoring
bitwise.  Keep the operation order of the contribution formula identical in
``bm25_score`` and in the ``bm25_accumulate`` kernels when editing.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from solverank import _kernels
from solverank.corpus import Corpus, tokenize
from solverank.errors import DataError
from solverank.ranking import RankedList
from solverank.util import atomic_write_text

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


@dataclass
class Posting:
    """Postings for one token: parallel doc-position/term-frequency arrays,
    positions strictly ascending."""

    positions: np.ndarray  # int64
    tfs: np.ndarray  # float64

    @property
    def df(self) -> int:
        return len(self.positions)


@dataclass
class Bm25Index:
    postings: dict[str, Posting]
    doc_lengths: np.ndarray  # float64, tokens per doc
    avg_doc_len: float
    doc_count: int
    k1: float
    b: float
    doc_ids: list[str]

    def idf(self, token: str) -> float:
        posting = self.postings.get(token)
        df = posting.df if posting is not None else 0
        return math.log((self.doc_count - df + 0.5) / (df + 0.5) + 1.0)


def build_bm25(corpus: Corpus, k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> Bm25Index:
    """Index ``tokenize(statement)`` of every problem."""
    if len(corpus) == 0:
        raise DataError("cannot build a BM25 index over an empty corpus")
    if k1 < 0:
        raise DataError(f"k1 must be >= 0, got {k1}")
    if not 0.0 <= b <= 1.0:
        raise DataError(f"b must be in [0, 1], got {b}")
    raw: dict[str, list[tuple[int, int]]] = {}
    doc_lengths = np.zeros(len(corpus), dtype=np.float64)
    for pos, problem in enumerate(corpus):
        tokens = tokenize(problem.statement)
        doc_lengths[pos] = float(len(tokens))
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for tok, tf in counts.items():
            raw.setdefault(tok, []).append((pos, tf))
    postings = {
        tok: Posting(
            positions=np.array([p for p, _ in plist], dtype=np.int64),
            tfs=np.array([tf for _, tf in plist], dtype=np.float64),
        )
        for tok, plist in raw.items()
    }
    return Bm25Index(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_len=float(np.mean(doc_lengths)),
        doc_count=len(corpus),
        k1=k1,
        b=b,
        doc_ids=corpus.ids,
    )


def _unique_in_order(tokens: list[str]) -> list[str]:
    seen = set()
    out = []
    for tok in tokens:
        if tok not in seen:
            seen.add(tok)
            out.append(tok)
    return out


def bm25_score(index: Bm25Index, query: list[str], doc: int) -> float:
    """Okapi score of one document for a tokenized query.

    Sum over unique query tokens of
    ``idf * (tf * (k1+1)) / (tf + k1 * ((1-b) + b * dl/avgdl))``;
    tokens absent from the document contribute 0.  The arithmetic mirrors
    the accumulate kernel step for step.
    """
    if not 0 <= doc < index.doc_count:
        raise DataError(f"document position {doc} out of range")
    k1, b = index.k1, index.b
    onemb = 1.0 - b
    k1p1 = k1 + 1.0
    dl = float(index.doc_lengths[doc])
    score = 0.0
    for tok in _unique_in_order(query):
        posting = index.postings.get(tok)
        if posting is None:
            continue
        i = bisect_left(posting.positions, doc)
        if i == len(posting.positions) or posting.positions[i] != doc:
            continue
        tf = float(posting.tfs[i])
        idf = index.idf(tok)
        t1 = dl / index.avg_doc_len
        t2 = b * t1
        norm = onemb + t2
        denom = tf + k1 * norm
        numer = tf * k1p1
        contrib = (idf * numer) / denom
        score += contrib
    return score


def bm25_search(index: Bm25Index, query_text: str, k: int, query_id: str = "") -> RankedList:
    """Top-k documents for a raw query string.

    Exhaustive over documents sharing at least one query token; zero-score
    documents (no lexical evidence) are excluded, so the result may be
    shorter than k.  Ties break by ascending doc id.
    """
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    tokens = _unique_in_order(tokenize(query_text))
    scores = np.zeros(index.doc_count, dtype=np.float64)
    matched = np.zeros(index.doc_count, dtype=bool)
    for tok in tokens:
        posting = index.postings.get(tok)
        if posting is None:
            continue
        _kernels.bm25_accumulate(
            scores,
            posting.positions,
            posting.tfs,
            index.doc_lengths,
            index.avg_doc_len,
            index.idf(tok),
            index.k1,
            index.b,
        )
        matched[posting.positions] = True
    candidates = np.flatnonzero(matched)
    pairs = [
        (index.doc_ids[pos], float(scores[pos]))
        for pos in candidates.tolist()
        if scores[pos] != 0.0
    ]
    return RankedList.from_scores(query_id, pairs, k=k)


def save_bm25(index: Bm25Index, path: str, meta: dict | None = None) -> None:
    """JSON persistence; token order sorted so output bytes are reproducible."""
    payload = {
        "format": "solverank-bm25",
        "version": 1,
        "k1": index.k1,
        "b": index.b,
        "doc_ids": index.doc_ids,
        "doc_lengths": index.doc_lengths.astype(int).tolist(),
        "postings": {
            tok: [[int(p), int(tf)] for p, tf in zip(posting.positions.tolist(), posting.tfs.tolist())]
            for tok, posting in sorted(index.postings.items())
        },
    }
    if meta is not None:
        payload["meta"] = meta
    atomic_write_text(path, json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n")


def load_bm25(path: str) -> Bm25Index:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read BM25 index {path}: {exc}") from exc
    if payload.get("format") != "solverank-bm25":
        raise DataError(f"{path} is not a BM25 index file")
    doc_lengths = np.asarray(payload["doc_lengths"], dtype=np.float64)
    postings = {
        tok: Posting(
            positions=np.array([p for p, _ in plist], dtype=np.int64),
            tfs=np.array([tf for _, tf in plist], dtype=np.float64),
        )
        for tok, plist in payload["postings"].items()
    }
    return Bm25Index(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_len=float(np.mean(doc_lengths)),
        doc_count=len(doc_lengths),
        k1=float(payload["k1"]),
        b=float(payload["b"]),
        doc_ids=list(payload["doc_ids"]),
    )
