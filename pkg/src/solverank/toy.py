"""Vocabulary-swap toy corpus.

A fully offline fixture family that separates lexical from solution-level
matching: every anchor statement is built from a 50-term content vocabulary
and its "variants" come from a fixed dictionary mapping each term (plus the
filler) into a disjoint synthetic vocabulary, so an anchor shares zero
tokens with any variant.  Lexical retrieval therefore scores nothing, while
a trained dual encoder can learn the term correspondence.

Statement shape matters: each sampled term appears doubled and separated by
a filler token ("t t mid u u mid ..."), which makes every unigram and
bigram a term-global feature.  With no anchor-unique features to memorize,
contrastive training is forced into the term mapping itself and generalizes
to held-out anchors.

Sample I/O is a two-integer sum, solvable by ``CANNED_PROGRAM``; every
third anchor carries a deliberately wrong expected output so canned-
generator pipelines produce a mixed pass/fail report.
"""

from __future__ import annotations

import json
import random

from solverank.corpus import Corpus, Problem
from solverank.util import derive_seed

N_CONTENT_TERMS = 50
DEFAULT_ANCHORS = 60
DEFAULT_HELD_OUT = 15
TERMS_PER_STATEMENT = 6
DEFAULT_SEED = 11

CONTENT_TERMS = [f"orig{i:02d}" for i in range(N_CONTENT_TERMS)]
SWAPPED_TERMS = [f"swap{i:02d}" for i in range(N_CONTENT_TERMS)]
FILLER_TERM = "mid"
FILLER_SWAPPED = "dim"

CANNED_PROGRAM = "print(sum(map(int, input().split())))\n"

_DIFFICULTIES = (800, 1700, 2300)


def substitution_dict() -> dict[str, str]:
    mapping = dict(zip(CONTENT_TERMS, SWAPPED_TERMS))
    mapping[FILLER_TERM] = FILLER_SWAPPED
    return mapping


def toy_statement(rng: random.Random, terms_per_statement: int = TERMS_PER_STATEMENT) -> str:
    terms = sorted(rng.sample(CONTENT_TERMS, terms_per_statement))
    return f" {FILLER_TERM} ".join(f"{t} {t}" for t in terms)


def make_toy_corpus(
    n_anchors: int = DEFAULT_ANCHORS,
    terms_per_statement: int = TERMS_PER_STATEMENT,
    seed: int = DEFAULT_SEED,
) -> Corpus:
    """Deterministic anchor corpus with difficulties cycling over the bins."""
    problems = []
    for i in range(n_anchors):
        rng = random.Random(derive_seed(seed, "toy-anchor", str(i)))
        statement = toy_statement(rng, terms_per_statement)
        x, y = rng.randint(1, 50), rng.randint(1, 50)
        expected = x + y if i % 3 != 2 else x + y + 1  # every third is unsolvable
        problems.append(
            Problem(
                id=f"toy{i:03d}",
                statement=statement,
                input_spec="two integers on one line",
                output_spec="one integer",
                notes="",
                samples=[(f"{x} {y}\n", f"{expected}\n")],
                code=CANNED_PROGRAM,
                language_tag="Python",
                difficulty=_DIFFICULTIES[i % 3],
                tags=["toy"],
            )
        )
    return Corpus(problems)


def held_out_ids(corpus: Corpus, n: int = DEFAULT_HELD_OUT) -> list[str]:
    """The last n anchors, reserved for retrieval evaluation."""
    return corpus.ids[-n:]


def train_split(corpus: Corpus, n_held_out: int = DEFAULT_HELD_OUT) -> tuple[Corpus, list[str]]:
    held = set(held_out_ids(corpus, n_held_out))
    return Corpus([p for p in corpus if p.id not in held]), sorted(held)


def mining_corpus(train_corpus: Corpus, train_variants) -> Corpus:
    """Negative-mining pool: training anchors plus their variants.

    Including variants is what makes the contrastive task nondegenerate: if
    negatives never contain swapped-vocabulary texts the loss is minimized
    by telling the two vocabularies apart instead of learning the term
    correspondence.
    """
    extra = [Problem(id=v.variant_id, statement=v.text) for v in train_variants]
    return Corpus(list(train_corpus) + extra)


def write_substitution_dict(path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(substitution_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
