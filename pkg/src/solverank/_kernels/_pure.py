"""Pure numpy/Python reference backend for the hot kernels.

The native backend mirrors these functions statement for statement; keep the
floating-point operation order in sync when editing either side.
"""

from __future__ import annotations

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string (stable across platforms)."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def hash_ngrams(tokens: list[str], mask: int) -> tuple[np.ndarray, np.ndarray]:
    """Hash unigrams then adjacent bigrams to (index, sign) streams.

    index = fnv1a64(ngram) & mask, sign = -1 if hash bit 63 is set else +1.
    Bigrams join tokens with "_", which cannot occur inside a token.
    """
    n = len(tokens)
    total = n + max(0, n - 1)
    idx = np.empty(total, dtype=np.int64)
    sign = np.empty(total, dtype=np.float64)
    k = 0
    for t in tokens:
        h = fnv1a64(t.encode("utf-8"))
        idx[k] = h & mask
        sign[k] = -1.0 if h >> 63 else 1.0
        k += 1
    for i in range(n - 1):
        h = fnv1a64((tokens[i] + "_" + tokens[i + 1]).encode("utf-8"))
        idx[k] = h & mask
        sign[k] = -1.0 if h >> 63 else 1.0
        k += 1
    return idx, sign


def bm25_accumulate(
    scores: np.ndarray,
    positions: np.ndarray,
    tfs: np.ndarray,
    doc_lens: np.ndarray,
    avgdl: float,
    idf: float,
    k1: float,
    b: float,
) -> None:
    """Add one query term's Okapi contribution to every posting in place.

    scores[p] += idf * (tf * (k1+1)) / (tf + k1 * ((1-b) + b * dl/avgdl))

    Positions within one posting list are unique, so plain fancy-index
    addition is safe.  The expression is decomposed exactly like the native
    loop so both backends round identically.
    """
    dl = doc_lens[positions]
    t1 = dl / avgdl
    t2 = b * t1
    norm = (1.0 - b) + t2
    denom = tfs + k1 * norm
    numer = tfs * (k1 + 1.0)
    contrib = (idf * numer) / denom
    scores[positions] += contrib


def dot(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.dot(u, v))


def dot_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Per-row dot products against ``query``.

    Deliberately row-by-row rather than ``matrix @ query``: the scan must
    score each document exactly like a standalone ``dot`` call, and BLAS
    gemv rounds differently from per-row ddot.
    """
    n = matrix.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = np.dot(matrix[i], query)
    return out
