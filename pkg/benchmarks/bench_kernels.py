#!/usr/bin/env python3
"""Benchmark the pure numpy kernels against the compiled extension.

Runs each hot kernel at realistic sizes with both backends in-process and
prints a table of medians plus the speedup.  Exits nonzero if the native
module is unavailable unless --allow-pure-only is given.
"""

import argparse
import random
import statistics
import sys
import time

import numpy as np

from solverank._kernels import _pure

try:
    from solverank._kernels import _native
except ImportError:
    _native = None


def time_call(fn, *args, repeats=7, **kwargs):
    timings = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn(*args, **kwargs)
        timings.append(time.perf_counter() - started)
    return statistics.median(timings)


def bench_hash_ngrams(backend, tokens_batch, mask):
    def run():
        for tokens in tokens_batch:
            backend.hash_ngrams(tokens, mask)

    return time_call(run)


def bench_bm25(backend, scores, postings, doc_lens, avgdl):
    def run():
        scores[:] = 0.0
        for positions, tfs, idf in postings:
            backend.bm25_accumulate(scores, positions, tfs, doc_lens, avgdl, idf, 1.2, 0.75)

    return time_call(run)


def bench_dot_scores(backend, matrix, query):
    return time_call(backend.dot_scores, matrix, query)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--allow-pure-only", action="store_true")
    parser.add_argument("--docs", type=int, default=20000, help="synthetic corpus size")
    parser.add_argument("--dim", type=int, default=128, help="embedding dimension")
    args = parser.parse_args()

    if _native is None and not args.allow_pure_only:
        print("native kernels are not built; rerun setup or pass --allow-pure-only", file=sys.stderr)
        return 1

    rng = random.Random(0)
    nrng = np.random.default_rng(0)
    vocab = [f"term{i:04d}" for i in range(3000)]
    tokens_batch = [
        [rng.choice(vocab) for _ in range(rng.randint(80, 300))] for _ in range(200)
    ]
    mask = (1 << 16) - 1

    n_docs = args.docs
    doc_lens = nrng.integers(30, 400, n_docs).astype(np.float64)
    avgdl = float(np.mean(doc_lens))
    postings = []
    for _ in range(25):  # one synthetic query of 25 terms
        df = int(nrng.integers(50, n_docs // 3))
        positions = np.sort(nrng.choice(n_docs, size=df, replace=False)).astype(np.int64)
        tfs = nrng.integers(1, 6, df).astype(np.float64)
        postings.append((positions, tfs, float(nrng.uniform(0.2, 3.0))))
    scores = np.zeros(n_docs)

    matrix = nrng.standard_normal((n_docs, args.dim))
    query = nrng.standard_normal(args.dim)

    cases = [
        ("hash_ngrams (200 stmts)", lambda be: bench_hash_ngrams(be, tokens_batch, mask)),
        (f"bm25_accumulate ({n_docs} docs)", lambda be: bench_bm25(be, scores, postings, doc_lens, avgdl)),
        (f"dot_scores ({n_docs}x{args.dim})", lambda be: bench_dot_scores(be, matrix, query)),
    ]

    print(f"{'kernel':<30} {'pure':>12} {'native':>12} {'speedup':>9}")
    print("-" * 66)
    for name, bench in cases:
        pure_s = bench(_pure)
        if _native is not None:
            native_s = bench(_native)
            speedup = pure_s / native_s if native_s > 0 else float("inf")
            print(f"{name:<30} {pure_s * 1e3:>10.2f}ms {native_s * 1e3:>10.2f}ms {speedup:>8.1f}x")
        else:
            print(f"{name:<30} {pure_s * 1e3:>10.2f}ms {'n/a':>12} {'':>9}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
