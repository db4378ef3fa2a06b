"""Hot inner-loop kernels with a compiled fast path.

The Cython module ``_native`` accelerates the three loops that dominate
runtime at corpus scale: n-gram feature hashing, BM25 posting-list
accumulation, and exhaustive dot-product scans.  It is optional: when it was
not built, or when ``SOLVERANK_PURE=1`` is set, the numpy implementations in
``_pure`` are used instead.

Both backends hash bit-identically (pure integer arithmetic) and evaluate
the BM25 term contribution with the same operation order, so scores agree
bitwise.  Dot products may differ from the native backend at the last ulp
(BLAS reassociates sums); each backend is internally consistent and fully
deterministic, which is what the exactness and determinism guarantees rest
on.  ``benchmarks/bench_kernels.py`` compares the two.
"""

import os

if os.environ.get("SOLVERANK_PURE"):
    from solverank._kernels import _pure as _impl

    BACKEND = "pure"
else:
    try:
        from solverank._kernels import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        from solverank._kernels import _pure as _impl  # type: ignore[no-redef]

        BACKEND = "pure"

fnv1a64 = _impl.fnv1a64
hash_ngrams = _impl.hash_ngrams
bm25_accumulate = _impl.bm25_accumulate
dot = _impl.dot
dot_scores = _impl.dot_scores

__all__ = [
    "BACKEND",
    "fnv1a64",
    "hash_ngrams",
    "bm25_accumulate",
    "dot",
    "dot_scores",
]
