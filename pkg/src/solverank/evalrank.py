"""Ranking evaluation: Precision@K, Recall@K, and MRR.

The evaluation protocol for synthetic-variant retrieval: each anchor
problem is a query, the pooled variants are the documents, and a variant is
relevant exactly to its own anchor.  With five verified variants per anchor
this forces R@K = K * P@K / 5 per query, which is the arithmetic consistency
the report format preserves (a run scoring P@1 = 0.682 must score
R@1 = 0.1364).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from solverank.errors import DataError
from solverank.ranking import RankedList
from solverank.synth import SyntheticSet
from solverank.util import atomic_write_text, dumps_record

log = logging.getLogger(__name__)

DEFAULT_KS = (1, 3, 5)

Qrels = dict[str, set[str]]


def build_qrels(synth: SyntheticSet) -> Qrels:
    """Query = anchor id, relevant set = its verified variant ids.

    Anchors with no verified variants are excluded (a qrels entry is never
    empty); a fully unverified set is an error.
    """
    qrels: Qrels = {}
    for anchor_id, variants in synth.by_anchor.items():
        if variants:
            qrels[anchor_id] = {v.variant_id for v in variants}
    if not qrels:
        raise DataError("no verified variants; cannot build relevance judgments")
    return qrels


@dataclass
class QueryScores:
    query_id: str
    precision: dict[int, float]
    recall: dict[int, float]
    reciprocal_rank: float


@dataclass
class RankEvalReport:
    ks: tuple[int, ...]
    precision: dict[int, float]
    recall: dict[int, float]
    mrr: float
    query_count: int
    per_query: list[QueryScores] = field(default_factory=list)

    def to_json(self, meta: dict | None = None) -> dict:
        out: dict = {}
        for k in self.ks:
            out[f"P@{k}"] = self.precision[k]
            out[f"R@{k}"] = self.recall[k]
        out["MRR"] = self.mrr
        out["queries"] = self.query_count
        if meta is not None:
            out["meta"] = meta
        return out

    def to_text(self) -> str:
        cols = []
        for k in self.ks:
            cols.extend([f"P@{k}", f"R@{k}"])
        cols.append("MRR")
        header = "".join(f"{c:>10}" for c in cols)
        values = []
        for k in self.ks:
            values.extend([self.precision[k], self.recall[k]])
        values.append(self.mrr)
        row = "".join(f"{v:>10.3f}" for v in values)
        return header + "\n" + row


def evaluate_ranking(
    runs: dict[str, RankedList],
    qrels: Qrels,
    ks: tuple[int, ...] = DEFAULT_KS,
) -> RankEvalReport:
    """Unweighted per-query means of P@K, R@K, and reciprocal rank.

    P@K = |relevant in top-K| / K, R@K = |relevant in top-K| / |relevant|,
    RR = 1 / rank of the first relevant document (0 if none is retrieved;
    no rank cutoff).  Queries in the qrels but missing from the run score
    zero and stay in the denominator, with a warning.
    """
    if not qrels:
        raise DataError("empty relevance judgments")
    for k in ks:
        if k <= 0:
            raise DataError(f"K must be positive, got {k}")
    per_query: list[QueryScores] = []
    for query_id in sorted(qrels):
        relevant = qrels[query_id]
        run = runs.get(query_id)
        if run is None:
            log.warning("query %r missing from the run; scoring zero", query_id)
            per_query.append(
                QueryScores(query_id, {k: 0.0 for k in ks}, {k: 0.0 for k in ks}, 0.0)
            )
            continue
        retrieved = run.doc_ids
        precision = {}
        recall = {}
        for k in ks:
            hits = sum(1 for doc_id in retrieved[:k] if doc_id in relevant)
            precision[k] = hits / k
            recall[k] = hits / len(relevant)
        rr = 0.0
        for rank, doc_id in enumerate(retrieved, start=1):
            if doc_id in relevant:
                rr = 1.0 / rank
                break
        per_query.append(QueryScores(query_id, precision, recall, rr))
    q = len(per_query)
    return RankEvalReport(
        ks=tuple(ks),
        precision={k: sum(s.precision[k] for s in per_query) / q for k in ks},
        recall={k: sum(s.recall[k] for s in per_query) / q for k in ks},
        mrr=sum(s.reciprocal_rank for s in per_query) / q,
        query_count=q,
        per_query=per_query,
    )


def save_qrels(qrels: Qrels, path: str, meta: dict | None = None) -> None:
    """Tab-separated ``query_id  doc_id`` pairs, one per line."""
    lines = []
    if meta is not None:
        lines.append("# meta\t" + dumps_record(meta))
    for query_id in sorted(qrels):
        for doc_id in sorted(qrels[query_id]):
            lines.append(f"{query_id}\t{doc_id}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_qrels(path: str) -> Qrels:
    qrels: Qrels = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read qrels {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'query_id<TAB>doc_id'")
            qrels.setdefault(parts[0], set()).add(parts[1])
    if not qrels:
        raise DataError(f"qrels file {path} is empty")
    return qrels
