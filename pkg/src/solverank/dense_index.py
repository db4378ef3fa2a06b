"""Dense exhaustive top-K retrieval over an encoded corpus.

No approximate structures: scoring is an exact scan, so index search equals
a brute-force re-scoring of every document.  An index remembers the
fingerprint of the parameters that built it and refuses queries embedded
with different parameters, preventing mixed-checkpoint retrieval.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass

import numpy as np

from solverank import _kernels
from solverank.clients import TextClient
from solverank.corpus import Corpus, tokenize
from solverank.encoder import EncoderParams, encode_passage, encode_query, featurize, params_fingerprint
from solverank.errors import DataError
from solverank.ranking import RankedList
from solverank.synth import verify_equivalence
from solverank.util import atomic_write_bytes

log = logging.getLogger(__name__)

_INDEX_MAGIC = b"SRIX"
_INDEX_VERSION = 1


@dataclass
class DenseIndex:
    doc_ids: list[str]
    embeddings: np.ndarray  # (docs, d) float64
    params_fingerprint: str


@dataclass
class VerificationAudit:
    """Per-candidate judge outcome from filter_verified."""

    doc_id: str
    verdict: bool
    raw_reply: str


def build_dense_index(params: EncoderParams, corpus: Corpus) -> DenseIndex:
    """Embed every problem statement with the passage encoder."""
    if len(corpus) == 0:
        raise DataError("cannot index an empty corpus")
    matrix = np.empty((len(corpus), params.embed_dim), dtype=np.float64)
    for pos, problem in enumerate(corpus):
        matrix[pos] = encode_passage(params, featurize(tokenize(problem.statement), params.feature_dim))
    return DenseIndex(
        doc_ids=corpus.ids,
        embeddings=matrix,
        params_fingerprint=params_fingerprint(params),
    )


def dense_search(
    index: DenseIndex,
    params: EncoderParams,
    query_text: str,
    k: int,
    query_id: str = "",
) -> RankedList:
    """Exhaustive inner-product top-k with deterministic tie-breaking.

    Scores each row with the same dot kernel ``similarity`` uses, so a
    standalone re-score of any document reproduces the search score exactly.
    """
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    fingerprint = params_fingerprint(params)
    if fingerprint != index.params_fingerprint:
        raise DataError(
            "parameter fingerprint does not match the index "
            f"({fingerprint[:12]}... vs {index.params_fingerprint[:12]}...)"
        )
    query_emb = encode_query(params, featurize(tokenize(query_text), params.feature_dim))
    scores = _kernels.dot_scores(index.embeddings, query_emb)
    pairs = [(doc_id, float(score)) for doc_id, score in zip(index.doc_ids, scores.tolist())]
    return RankedList.from_scores(query_id, pairs, k=k)


def filter_verified(
    query_text: str,
    ranked: RankedList,
    corpus: Corpus,
    judge: TextClient,
    template_text: str | None = None,
) -> tuple[RankedList, list[VerificationAudit]]:
    """Keep only candidates the judge deems logically equivalent.

    Order is preserved and no ids are introduced; every judge verdict is
    returned in the audit trail.  Judge unavailability propagates as an
    error rather than silently passing candidates through.
    """
    kept: list[tuple[str, float]] = []
    audits: list[VerificationAudit] = []
    for doc_id, score in ranked.entries:
        candidate = corpus.get(doc_id)
        verdict, raw = verify_equivalence(
            query_text, candidate.statement, judge, template_text=template_text
        )
        audits.append(VerificationAudit(doc_id=doc_id, verdict=verdict, raw_reply=raw))
        if verdict:
            kept.append((doc_id, score))
    return RankedList(ranked.query_id, kept), audits


def save_dense_index(index: DenseIndex, path: str) -> None:
    """Binary layout: header (magic, version, doc count, d, fingerprint),
    id table (length-prefixed UTF-8), row-major little-endian float64."""
    n, d = index.embeddings.shape
    fp = index.params_fingerprint.encode("ascii")
    parts = [
        _INDEX_MAGIC,
        struct.pack("<IQII", _INDEX_VERSION, n, d, len(fp)),
        fp,
    ]
    for doc_id in index.doc_ids:
        raw = doc_id.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    parts.append(np.ascontiguousarray(index.embeddings, dtype="<f8").tobytes())
    atomic_write_bytes(path, b"".join(parts))


def load_dense_index(path: str) -> DenseIndex:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read dense index {path}: {exc}") from exc
    if len(blob) < 4 + struct.calcsize("<IQII") or blob[:4] != _INDEX_MAGIC:
        raise DataError(f"{path} is not a dense index file")
    offset = 4
    version, n, d, fp_len = struct.unpack_from("<IQII", blob, offset)
    offset += struct.calcsize("<IQII")
    if version != _INDEX_VERSION:
        raise DataError(f"unsupported dense index version {version}")
    fingerprint = blob[offset : offset + fp_len].decode("ascii")
    offset += fp_len
    doc_ids = []
    for _ in range(n):
        (id_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        doc_ids.append(blob[offset : offset + id_len].decode("utf-8"))
        offset += id_len
    expected = n * d * 8
    if len(blob) - offset != expected:
        raise DataError(f"{path}: embedding matrix truncated")
    matrix = np.frombuffer(blob, dtype="<f8", count=n * d, offset=offset).reshape(n, d).copy()
    return DenseIndex(doc_ids=doc_ids, embeddings=matrix, params_fingerprint=fingerprint)
