# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the hot kernels.

Mirrors ``_pure`` statement for statement.  Compiled with -ffp-contract=off
so the double arithmetic rounds exactly like the numpy/Python reference;
see the package docstring in ``_kernels/__init__.py`` for the guarantees.
"""

import numpy as np

cdef unsigned long long _FNV_OFFSET = 0xCBF29CE484222325
cdef unsigned long long _FNV_PRIME = 0x100000001B3


cdef unsigned long long _fnv1a64_bytes(const unsigned char[::1] data) noexcept nogil:
    cdef unsigned long long h = _FNV_OFFSET
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        h = (h ^ data[i]) * _FNV_PRIME
    return h


def fnv1a64(bytes data) -> int:
    """FNV-1a 64-bit hash of a byte string (stable across platforms)."""
    if len(data) == 0:
        return _FNV_OFFSET
    return _fnv1a64_bytes(data)


def hash_ngrams(list tokens, long long mask):
    """Hash unigrams then adjacent bigrams to (index, sign) streams."""
    cdef Py_ssize_t n = len(tokens)
    cdef Py_ssize_t total = n + (n - 1 if n > 1 else 0)
    idx_arr = np.empty(total, dtype=np.int64)
    sign_arr = np.empty(total, dtype=np.float64)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] sign = sign_arr
    cdef Py_ssize_t i, k = 0
    cdef unsigned long long h
    cdef bytes enc
    for i in range(n):
        enc = (<str> tokens[i]).encode("utf-8")
        h = _fnv1a64_bytes(enc) if len(enc) else _FNV_OFFSET
        idx[k] = <long long> (h & <unsigned long long> mask)
        sign[k] = -1.0 if h >> 63 else 1.0
        k += 1
    for i in range(n - 1):
        enc = ((<str> tokens[i]) + "_" + (<str> tokens[i + 1])).encode("utf-8")
        h = _fnv1a64_bytes(enc) if len(enc) else _FNV_OFFSET
        idx[k] = <long long> (h & <unsigned long long> mask)
        sign[k] = -1.0 if h >> 63 else 1.0
        k += 1
    return idx_arr, sign_arr


def bm25_accumulate(
    double[::1] scores,
    long long[::1] positions,
    double[::1] tfs,
    double[::1] doc_lens,
    double avgdl,
    double idf,
    double k1,
    double b,
):
    """Add one query term's Okapi contribution to every posting in place."""
    cdef Py_ssize_t i, n = positions.shape[0]
    cdef long long p
    cdef double dl, t1, t2, norm, denom, numer, contrib
    cdef double onemb = 1.0 - b
    cdef double k1p1 = k1 + 1.0
    with nogil:
        for i in range(n):
            p = positions[i]
            dl = doc_lens[p]
            t1 = dl / avgdl
            t2 = b * t1
            norm = onemb + t2
            denom = tfs[i] + k1 * norm
            numer = tfs[i] * k1p1
            contrib = (idf * numer) / denom
            scores[p] += contrib


cdef double _dot(const double[::1] u, const double[::1] v) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(u.shape[0]):
        acc += u[i] * v[i]
    return acc


def dot(u, v) -> float:
    cdef const double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    return _dot(uu, vv)


def dot_scores(matrix, query):
    """Per-row dot products against ``query``."""
    cdef const double[:, ::1] m = np.ascontiguousarray(matrix, dtype=np.float64)
    cdef const double[::1] q = np.ascontiguousarray(query, dtype=np.float64)
    out_arr = np.empty(m.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m.shape[0]):
            out[i] = _dot(m[i], q)
    return out_arr
