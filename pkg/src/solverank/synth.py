"""Synthetic variant generation and verification.

For every anchor problem the generator client is asked for exactly five
logic-preserving restatements (one per line); each line is then judged
against the anchor by a verifier client answering Yes/No.  All five
variants are recorded with their verdicts for auditability; only verified
ones count as training positives.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from solverank.clients import TextClient
from solverank.corpus import Corpus, Problem
from solverank.errors import ClientError, DataError, ReplyFormatError
from solverank.prompts import render_generate, render_verify
from solverank.util import read_jsonl, write_jsonl

log = logging.getLogger(__name__)

VARIANTS_PER_ANCHOR = 5
PARSE_RETRIES = 1

_LIST_MARKER_RE = re.compile(r"^(?:\d+\s*[.)]\s*|[-*•]\s+)")
_YES_NORM_RE = re.compile(r"[^0-9a-z]+")


@dataclass
class SyntheticVariant:
    """One generated restatement of an anchor problem."""

    anchor_id: str
    variant_id: str
    text: str
    verified: bool
    verifier_raw: str

    def __post_init__(self):
        expected_prefix = self.anchor_id + "#"
        if not self.variant_id.startswith(expected_prefix):
            raise DataError(f"variant id {self.variant_id!r} does not extend {self.anchor_id!r}")
        suffix = self.variant_id[len(expected_prefix) :]
        if not suffix.isdigit() or not 1 <= int(suffix) <= VARIANTS_PER_ANCHOR:
            raise DataError(f"variant ordinal out of range in {self.variant_id!r}")
        if self.verified and not normalized_yes(self.verifier_raw):
            raise DataError(f"variant {self.variant_id!r} marked verified without a yes verdict")

    @property
    def ordinal(self) -> int:
        return int(self.variant_id.rsplit("#", 1)[1])

    def to_record(self) -> dict:
        return {
            "anchor_id": self.anchor_id,
            "variant_id": self.variant_id,
            "text": self.text,
            "verified": self.verified,
            "verifier_raw": self.verifier_raw,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SyntheticVariant":
        try:
            return cls(
                anchor_id=rec["anchor_id"],
                variant_id=rec["variant_id"],
                text=rec["text"],
                verified=bool(rec["verified"]),
                verifier_raw=rec["verifier_raw"],
            )
        except KeyError as exc:
            raise DataError(f"synthetic record missing key {exc}") from exc


class SyntheticSet:
    """All variants of a run; ``by_anchor`` lists only the verified ones."""

    def __init__(self, variants: list[SyntheticVariant]):
        self.variants = list(variants)
        seen: set[str] = set()
        self.by_anchor: dict[str, list[SyntheticVariant]] = {}
        for v in self.variants:
            if v.variant_id in seen:
                raise DataError(f"duplicate variant id {v.variant_id!r}")
            seen.add(v.variant_id)
            if v.verified:
                self.by_anchor.setdefault(v.anchor_id, []).append(v)

    def __len__(self) -> int:
        return len(self.variants)

    @property
    def verified_count(self) -> int:
        return sum(1 for v in self.variants if v.verified)

    def validate_against(self, corpus: Corpus) -> None:
        for v in self.variants:
            if v.anchor_id not in corpus:
                raise DataError(f"variant {v.variant_id!r} references unknown anchor")


def normalized_yes(reply: str) -> bool:
    """True iff the reply, lowercased and stripped of punctuation and
    whitespace, begins with "yes"."""
    return _YES_NORM_RE.sub("", reply.lower()).startswith("yes")


def strip_list_marker(line: str) -> str:
    return _LIST_MARKER_RE.sub("", line.strip())


def generate_variants(
    anchor: Problem, client: TextClient, template_text: str | None = None
) -> list[str]:
    """Ask the generator for exactly five restatements of the anchor.

    Leading list markers ("1. ", "- ", ...) are tolerated and stripped.  A
    reply without exactly five nonempty lines raises ReplyFormatError with
    the raw reply attached (callers may retry).
    """
    if not anchor.statement:
        raise DataError(f"anchor {anchor.id!r} has an empty statement")
    prompt = render_generate(anchor.statement, template_text=template_text)
    reply = client.complete(prompt)
    lines = [strip_list_marker(line) for line in reply.splitlines()]
    lines = [line for line in lines if line]
    if len(lines) != VARIANTS_PER_ANCHOR:
        raise ReplyFormatError(
            f"expected {VARIANTS_PER_ANCHOR} variant lines, got {len(lines)}",
            raw_reply=reply,
        )
    return lines


def verify_equivalence(
    a: str, b: str, client: TextClient, template_text: str | None = None
) -> tuple[bool, str]:
    """Judge whether two problem statements share the same solution logic.

    The verdict is a pure parse of the reply (yes-prefix after
    normalization); an empty reply is a warning and counts as No, so a
    single judge abstention cannot crash a batch.
    """
    if not a or not b:
        raise DataError("verify_equivalence requires two nonempty statements")
    prompt = render_verify(a, b, template_text=template_text)
    reply = client.complete(prompt)
    if not reply.strip():
        log.warning("judge %r returned an empty reply; treating as No", client.model)
        return False, reply
    return normalized_yes(reply), reply


def _synthesize_one(
    anchor: Problem,
    gen: TextClient,
    judge: TextClient,
    gen_template: str | None = None,
    verify_template: str | None = None,
) -> list[SyntheticVariant] | None:
    texts = None
    for attempt in range(PARSE_RETRIES + 1):
        try:
            texts = generate_variants(anchor, gen, template_text=gen_template)
            break
        except ReplyFormatError as exc:
            log.warning(
                "anchor %r: malformed generation reply (attempt %d): %s",
                anchor.id,
                attempt + 1,
                exc,
            )
        except ClientError as exc:
            log.warning("anchor %r: generation client failed: %s", anchor.id, exc)
            return None
    if texts is None:
        log.warning("anchor %r: skipped after %d parse failures", anchor.id, PARSE_RETRIES + 1)
        return None
    variants = []
    for ordinal, text in enumerate(texts, start=1):
        try:
            verdict, raw = verify_equivalence(
                anchor.statement, text, judge, template_text=verify_template
            )
        except ClientError as exc:
            log.warning("anchor %r ordinal %d: judge failed (%s); marking unverified", anchor.id, ordinal, exc)
            verdict, raw = False, f"<judge unavailable: {exc}>"
        variants.append(
            SyntheticVariant(
                anchor_id=anchor.id,
                variant_id=f"{anchor.id}#{ordinal}",
                text=text,
                verified=verdict,
                verifier_raw=raw,
            )
        )
    return variants


def synthesize_dataset(
    corpus: Corpus,
    gen: TextClient,
    judge: TextClient,
    seed: int = 0,
    jobs: int = 1,
    gen_template: str | None = None,
    verify_template: str | None = None,
) -> SyntheticSet:
    """Generate and verify five variants per anchor over a whole corpus.

    Anchors whose generation keeps failing are skipped and logged; if every
    anchor fails the clients are considered unavailable and the run aborts.
    Output order is anchor order regardless of worker scheduling, so runs
    are deterministic given deterministic clients.  ``seed`` is recorded by
    callers into artifact metadata; generation itself draws no randomness.
    """
    if len(corpus) == 0:
        raise DataError("cannot synthesize from an empty corpus")
    anchors = list(corpus)

    def one(a: Problem):
        return _synthesize_one(a, gen, judge, gen_template, verify_template)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_anchor = list(pool.map(one, anchors))
    else:
        per_anchor = [one(a) for a in anchors]
    variants: list[SyntheticVariant] = []
    failed = 0
    for result in per_anchor:
        if result is None:
            failed += 1
        else:
            variants.extend(result)
    if failed == len(anchors):
        raise ClientError("generation failed for every anchor; client unavailable?")
    return SyntheticSet(variants)


def save_synthetic(synth: SyntheticSet, path: str, meta: dict | None = None) -> None:
    write_jsonl(path, (v.to_record() for v in synth.variants), meta=meta)


def load_synthetic(path: str, corpus: Corpus | None = None) -> SyntheticSet:
    try:
        records = [rec for _, rec in read_jsonl(path)]
    except OSError as exc:
        raise DataError(f"cannot read synthetic dataset {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"malformed synthetic dataset {path}: {exc}") from exc
    synth = SyntheticSet([SyntheticVariant.from_record(rec) for rec in records])
    if corpus is not None:
        synth.validate_against(corpus)
    return synth


def corpus_from_variants(synth: SyntheticSet, verified_only: bool = True) -> Corpus:
    """View variants as a retrieval pool: one pseudo-problem per variant."""
    problems = [
        Problem(id=v.variant_id, statement=v.text)
        for v in synth.variants
        if v.verified or not verified_only
    ]
    if not problems:
        raise DataError("no variants available to build a pool from")
    return Corpus(problems)
