"""Shared fixtures and independent mini-oracles used across the suite."""

from __future__ import annotations

import random

import pytest

from solverank.corpus import Corpus, Problem


def make_problem(pid: str, statement: str, **kwargs) -> Problem:
    return Problem(id=pid, statement=statement, **kwargs)


@pytest.fixture
def tiny_corpus() -> Corpus:
    return Corpus(
        [
            make_problem("p1", "find the maximum subarray sum", difficulty=800, code="print(1)"),
            make_problem("p2", "count inversions in an array", difficulty=1500, code="print(2)"),
            make_problem("p3", "shortest path in a weighted graph", difficulty=2100, code="print(3)"),
        ]
    )


_WORDS = [
    "array", "graph", "tree", "path", "sum", "count", "maximum", "minimum",
    "query", "update", "segment", "binary", "search", "sort", "greedy",
    "dynamic", "programming", "string", "prefix", "suffix", "modulo", "prime",
    "factor", "edge", "node", "weight", "distance", "grid", "cell", "move",
]


def random_statement(rng: random.Random, min_len: int = 3, max_len: int = 40) -> str:
    n = rng.randint(min_len, max_len)
    return " ".join(rng.choice(_WORDS) for _ in range(n))


def random_corpus(rng: random.Random, n_docs: int, prefix: str = "d") -> Corpus:
    problems = []
    for i in range(n_docs):
        problems.append(
            Problem(
                id=f"{prefix}{i:04d}",
                statement=random_statement(rng),
                difficulty=rng.choice([700, 1000, 1500, 1900, 2200, 2600]),
            )
        )
    return Corpus(problems)
