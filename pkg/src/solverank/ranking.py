"""Ranked retrieval results and the TREC-style run file shared by every
retriever (sparse, dense, random)."""

from __future__ import annotations

from dataclasses import dataclass, field

from solverank.errors import DataError
from solverank.util import atomic_write_text, dumps_record


@dataclass
class RankedList:
    """Ordered (doc id, score) results for one query.

    Scores are non-increasing; ties are broken by ascending doc id so every
    ranking is deterministic.  Doc ids are unique.
    """

    query_id: str
    entries: list[tuple[str, float]] = field(default_factory=list)

    @classmethod
    def from_scores(cls, query_id: str, pairs, k: int | None = None) -> "RankedList":
        """Sort (doc id, score) pairs by the tie rule and truncate to k."""
        ordered = sorted(pairs, key=lambda e: (-e[1], e[0]))
        if k is not None:
            ordered = ordered[:k]
        return cls(query_id, ordered)

    @property
    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.entries]

    def validate(self) -> None:
        seen = set()
        prev = None
        for doc_id, score in self.entries:
            if doc_id in seen:
                raise DataError(f"duplicate doc id {doc_id!r} in ranking for {self.query_id!r}")
            seen.add(doc_id)
            if prev is not None:
                prev_score, prev_id = prev
                if score > prev_score or (score == prev_score and doc_id < prev_id):
                    raise DataError(f"ranking for {self.query_id!r} violates the tie rule")
            prev = (score, doc_id)


def write_run_file(path: str, runs: list[RankedList], tag: str, meta: dict | None = None) -> None:
    """Tab-separated ``query_id  doc_id  rank  score  tag`` rows, rank from 1.

    Scores are written with ``repr`` so they round-trip exactly.  An optional
    leading ``#``-comment line carries run metadata.
    """
    lines = []
    if meta is not None:
        lines.append("# meta\t" + dumps_record(meta))
    for run in runs:
        for rank, (doc_id, score) in enumerate(run.entries, start=1):
            lines.append(f"{run.query_id}\t{doc_id}\t{rank}\t{score!r}\t{tag}")
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_run_file(path: str) -> dict[str, RankedList]:
    """Parse a run file back into per-query RankedLists (file order kept)."""
    runs: dict[str, RankedList] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 tab-separated fields")
            query_id, doc_id, rank_s, score_s, _tag = parts
            try:
                rank = int(rank_s)
                score = float(score_s)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            run = runs.setdefault(query_id, RankedList(query_id))
            if rank != len(run.entries) + 1:
                raise DataError(f"{path}:{lineno}: rank {rank} out of sequence for {query_id!r}")
            run.entries.append((doc_id, score))
    return runs
