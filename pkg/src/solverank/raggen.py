"""Retrieval-augmented code generation and local execution.

Per target problem: retrieve top-K problem-code exemplars (dense, sparse,
random, or none), assemble the code-generation prompt, call the generator
once (top-1, zero-shot), extract the code, run it against the problem's
sample I/O in an isolated temp workspace, and record everything.  Pass@1 is
reported per difficulty bin.

Execution trusts the configured runner command for sandboxing; the engine
itself enforces only timeouts, workspace isolation, and output capture.
"""

from __future__ import annotations

import logging
import random
import re
import shlex
import shutil
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from solverank.bm25 import Bm25Index, bm25_search
from solverank.clients import TextClient
from solverank.corpus import Corpus, Problem, difficulty_bin_label
from solverank.dense_index import DenseIndex, dense_search, filter_verified
from solverank.encoder import EncoderParams
from solverank.errors import ClientError, DataError, ReplyFormatError, RunnerError
from solverank.prompts import render_codegen
from solverank.ranking import RankedList
from solverank.util import derive_seed, read_jsonl, write_jsonl

log = logging.getLogger(__name__)

DEFAULT_EXEMPLAR_K = 3
_RETRIEVE_BUFFER = 10

VERDICT_PASS = "pass"
VERDICT_FAIL = "fail"
VERDICT_ERROR = "error"
VERDICT_TIMEOUT = "timeout"

_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


@dataclass
class Exemplar:
    """A retrieved problem-code pair used as prompt context."""

    problem_text: str
    code_text: str
    source_id: str

    def __post_init__(self):
        if not self.problem_text or not self.code_text:
            raise DataError(f"exemplar {self.source_id!r} has an empty text field")


@dataclass
class ExecConfig:
    """How to run a candidate program.

    ``runner`` is a command template with ``{src}`` (path of the written
    source file) and optionally ``{dir}`` (workspace directory) placeholders;
    the candidate always reads the testcase from standard input.
    """

    runner: str = "python3 {src}"
    timeout_s: float = 5.0
    compare: str = "trim"  # "trim" or "exact"
    source_name: str = "main.py"

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise DataError("timeout must be positive")
        if self.compare not in ("trim", "exact"):
            raise DataError(f"unknown comparison mode {self.compare!r}")


@dataclass
class GenerationRecord:
    problem_id: str
    prompt: str
    raw_reply: str
    extracted_code: str
    verdict: str
    outcomes: list[str] = field(default_factory=list)
    exemplar_ids: list[str] = field(default_factory=list)
    error: str = ""

    def to_record(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "prompt": self.prompt,
            "raw_reply": self.raw_reply,
            "extracted_code": self.extracted_code,
            "verdict": self.verdict,
            "outcomes": list(self.outcomes),
            "exemplar_ids": list(self.exemplar_ids),
            "error": self.error,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "GenerationRecord":
        try:
            return cls(
                problem_id=rec["problem_id"],
                prompt=rec.get("prompt", ""),
                raw_reply=rec.get("raw_reply", ""),
                extracted_code=rec.get("extracted_code", ""),
                verdict=rec["verdict"],
                outcomes=list(rec.get("outcomes", [])),
                exemplar_ids=list(rec.get("exemplar_ids", [])),
                error=rec.get("error", ""),
            )
        except KeyError as exc:
            raise DataError(f"generation record missing key {exc}") from exc


def build_codegen_prompt(
    target: Problem,
    exemplars: list[Exemplar],
    lang_label: str,
    template_text: str | None = None,
) -> str:
    """Render the code-generation prompt for one target.

    Exemplars are serialized as "Problem: <text>\\nCode:\\n<code>" joined by
    blank lines, in rank order; with no exemplars the whole context block is
    omitted (the no-retrieval condition).  Multiple samples are joined by
    newlines in their respective slots.
    """
    context = "\n\n".join(
        f"Problem: {e.problem_text}\nCode:\n{e.code_text}" for e in exemplars
    )
    sample_input = "\n".join(i for i, _ in target.samples)
    sample_output = "\n".join(o for _, o in target.samples)
    return render_codegen(
        description=target.statement,
        retrieved_context=context,
        input_spec=target.input_spec,
        output_spec=target.output_spec,
        sample_input=sample_input,
        sample_output=sample_output,
        notes=target.notes,
        lang_cluster=lang_label,
        template_text=template_text,
    )


def extract_code(raw_reply: str) -> str:
    """Pull program text out of a model reply.

    Fenced blocks win (all fence bodies concatenated, fence-line language
    tags dropped); otherwise the trimmed reply is taken verbatim.  An empty
    result is an error.
    """
    bodies = _FENCE_RE.findall(raw_reply)
    if bodies:
        code = "\n".join(body.rstrip("\n") for body in bodies)
    else:
        code = raw_reply.strip()
    if not code.strip():
        raise ReplyFormatError("no code found in reply", raw_reply=raw_reply)
    return code


def _normalize_output(text: str, mode: str) -> object:
    if mode == "exact":
        return text
    lines = [line.rstrip() for line in text.split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def execute_candidate(
    code: str, testcases: list[tuple[str, str]], cfg: ExecConfig
) -> list[str]:
    """Run one candidate against each testcase; outcomes in testcase order.

    Outcome per testcase: ``pass`` (output matches under cfg.compare),
    ``fail`` (ran fine, wrong output), ``error`` (nonzero exit), or
    ``timeout``.  The workspace is removed afterwards.
    """
    try:
        workspace = tempfile.mkdtemp(prefix="solverank-exec-")
    except OSError as exc:
        raise RunnerError(f"cannot create execution workspace: {exc}") from exc
    outcomes: list[str] = []
    try:
        src = Path(workspace) / cfg.source_name
        src.write_text(code, encoding="utf-8")
        argv = [
            token.replace("{src}", str(src)).replace("{dir}", workspace)
            for token in shlex.split(cfg.runner)
        ]
        if not argv:
            raise RunnerError("runner command template is empty")
        for case_input, expected in testcases:
            try:
                proc = subprocess.run(
                    argv,
                    input=case_input.encode("utf-8"),
                    stdout=subprocess.PIPE,
                    stderr=subprocess.PIPE,
                    timeout=cfg.timeout_s,
                    cwd=workspace,
                )
            except subprocess.TimeoutExpired:
                outcomes.append(VERDICT_TIMEOUT)
                continue
            except FileNotFoundError as exc:
                raise RunnerError(f"runner command not found: {argv[0]!r}") from exc
            if proc.returncode != 0:
                outcomes.append(VERDICT_ERROR)
                continue
            got = proc.stdout.decode("utf-8", errors="replace")
            if _normalize_output(got, cfg.compare) == _normalize_output(expected, cfg.compare):
                outcomes.append(VERDICT_PASS)
            else:
                outcomes.append(VERDICT_FAIL)
    finally:
        shutil.rmtree(workspace, ignore_errors=True)
    return outcomes


def aggregate_verdict(outcomes: list[str]) -> str:
    """Pass iff every testcase passed; otherwise the first failing outcome."""
    for outcome in outcomes:
        if outcome != VERDICT_PASS:
            return outcome
    return VERDICT_PASS


class DenseRetriever:
    def __init__(self, index: DenseIndex, params: EncoderParams):
        self.index = index
        self.params = params

    def retrieve(self, query_id: str, query_text: str, k: int) -> RankedList:
        return dense_search(self.index, self.params, query_text, k, query_id=query_id)


class SparseRetriever:
    def __init__(self, index: Bm25Index):
        self.index = index

    def retrieve(self, query_id: str, query_text: str, k: int) -> RankedList:
        return bm25_search(self.index, query_text, k, query_id=query_id)


class RandomRetriever:
    """Baseline: K exemplars sampled uniformly per query, seeded."""

    def __init__(self, pool_ids: list[str], seed: int = 0):
        self.pool_ids = list(pool_ids)
        self.seed = seed

    def retrieve(self, query_id: str, query_text: str, k: int) -> RankedList:
        rng = random.Random(derive_seed(self.seed, "rag-random", query_id))
        chosen = rng.sample(self.pool_ids, min(k, len(self.pool_ids)))
        # descending pseudo-scores keep the sampled order valid for RankedList
        return RankedList(query_id, [(doc_id, float(-i)) for i, doc_id in enumerate(chosen)])


def gather_exemplars(
    target: Problem, ranked: RankedList, pool: Corpus, k: int
) -> list[Exemplar]:
    """Join retrieved ids to problem-code pairs.

    The target itself is never an exemplar (id exclusion) and pool entries
    without reference code are skipped, taking the next ranked candidate.
    """
    exemplars: list[Exemplar] = []
    for doc_id, _score in ranked.entries:
        if doc_id == target.id:
            continue
        problem = pool.get(doc_id)
        if not problem.code:
            continue
        exemplars.append(
            Exemplar(problem_text=problem.statement, code_text=problem.code, source_id=doc_id)
        )
        if len(exemplars) == k:
            break
    return exemplars


def _process_target(
    target: Problem,
    pool: Corpus,
    retriever,
    k: int,
    gen: TextClient,
    exec_cfg: ExecConfig,
    lang_label: str,
    verify_judge: TextClient | None,
    codegen_template: str | None,
) -> GenerationRecord:
    exemplars: list[Exemplar] = []
    if retriever is not None and k > 0:
        ranked = retriever.retrieve(target.id, target.statement, k + _RETRIEVE_BUFFER)
        if verify_judge is not None:
            ranked, _audits = filter_verified(target.statement, ranked, pool, verify_judge)
            if not ranked.entries:
                log.warning(
                    "target %r: every retrieved candidate failed verification; "
                    "falling back to no-retrieval prompting",
                    target.id,
                )
        exemplars = gather_exemplars(target, ranked, pool, k)
    prompt = build_codegen_prompt(target, exemplars, lang_label, template_text=codegen_template)
    exemplar_ids = [e.source_id for e in exemplars]
    try:
        raw_reply = gen.complete(prompt)
    except ClientError as exc:
        log.warning("target %r: generation failed: %s", target.id, exc)
        return GenerationRecord(
            problem_id=target.id,
            prompt=prompt,
            raw_reply="",
            extracted_code="",
            verdict=VERDICT_ERROR,
            exemplar_ids=exemplar_ids,
            error=f"generation failed: {exc}",
        )
    try:
        code = extract_code(raw_reply)
    except ReplyFormatError as exc:
        return GenerationRecord(
            problem_id=target.id,
            prompt=prompt,
            raw_reply=raw_reply,
            extracted_code="",
            verdict=VERDICT_ERROR,
            exemplar_ids=exemplar_ids,
            error=str(exc),
        )
    outcomes = execute_candidate(code, target.samples, exec_cfg)
    return GenerationRecord(
        problem_id=target.id,
        prompt=prompt,
        raw_reply=raw_reply,
        extracted_code=code,
        verdict=aggregate_verdict(outcomes),
        outcomes=outcomes,
        exemplar_ids=exemplar_ids,
    )


def run_rag_pipeline(
    targets: Corpus,
    pool: Corpus,
    retriever,
    k: int,
    gen: TextClient,
    exec_cfg: ExecConfig,
    lang_label: str = "Python",
    verify_judge: TextClient | None = None,
    jobs: int = 1,
    codegen_template: str | None = None,
) -> list[GenerationRecord]:
    """Generate-and-execute for every target; one record per target.

    ``retriever`` is any object with ``retrieve(query_id, text, k)`` or None
    for the no-retrieval condition (k = 0 behaves identically).  When
    ``verify_judge`` is set, retrieved candidates are filtered for logical
    equivalence first; if the filter empties the list the target falls back
    to no-retrieval prompting with a warning.  Generation or extraction
    failures are recorded per target and never abort the batch; a broken
    runner configuration does abort (it would fail every record alike).

    Targets run on a bounded worker pool (``jobs``); records come back in
    target order regardless of completion order.
    """

    def one(target: Problem) -> GenerationRecord:
        return _process_target(
            target, pool, retriever, k, gen, exec_cfg, lang_label, verify_judge, codegen_template
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            return list(executor.map(one, targets))
    return [one(target) for target in targets]


@dataclass
class BinStats:
    attempts: int = 0
    passes: int = 0

    @property
    def rate(self) -> float | None:
        if self.attempts == 0:
            return None
        return 100.0 * self.passes / self.attempts


@dataclass
class Pass1Report:
    bins: dict[str, BinStats]
    overall: BinStats
    bounds: tuple[int, int]

    def to_json(self, meta: dict | None = None) -> dict:
        def bin_json(stats: BinStats) -> dict:
            return {"attempts": stats.attempts, "passes": stats.passes, "pass_at_1": stats.rate}

        out = {
            "bounds": list(self.bounds),
            "bins": {name: bin_json(stats) for name, stats in self.bins.items()},
            "overall": bin_json(self.overall),
        }
        if meta is not None:
            out["meta"] = meta
        return out

    def to_text(self) -> str:
        lo, hi = self.bounds
        labels = {
            "easy": f"D <= {lo}",
            "medium": f"{lo} < D <= {hi}",
            "hard": f"D > {hi}",
        }
        header = f"{'bin':<18} {'attempts':>9} {'passes':>7} {'pass@1':>8}"
        lines = [header, "-" * len(header)]
        for name in ("easy", "medium", "hard"):
            stats = self.bins[name]
            rate = "n/a" if stats.rate is None else f"{stats.rate:.2f}%"
            lines.append(f"{labels[name]:<18} {stats.attempts:>9} {stats.passes:>7} {rate:>8}")
        rate = "n/a" if self.overall.rate is None else f"{self.overall.rate:.2f}%"
        lines.append(f"{'overall':<18} {self.overall.attempts:>9} {self.overall.passes:>7} {rate:>8}")
        return "\n".join(lines)


def pass_at_1(
    records: list[GenerationRecord],
    corpus: Corpus,
    bounds: tuple[int, int] = (1400, 2000),
) -> Pass1Report:
    """Fraction of problems whose single generated program passes all tests,
    per difficulty bin; errors and timeouts count as non-pass."""
    if not records:
        raise DataError("no generation records to report on")
    bins = {"easy": BinStats(), "medium": BinStats(), "hard": BinStats()}
    overall = BinStats()
    for record in records:
        problem = corpus.get(record.problem_id)
        stats = bins[difficulty_bin_label(problem.difficulty, bounds)]
        stats.attempts += 1
        overall.attempts += 1
        if record.verdict == VERDICT_PASS:
            stats.passes += 1
            overall.passes += 1
    return Pass1Report(bins=bins, overall=overall, bounds=bounds)


def save_records(records: list[GenerationRecord], path: str, meta: dict | None = None) -> None:
    write_jsonl(path, (r.to_record() for r in records), meta=meta)


def load_records(path: str) -> list[GenerationRecord]:
    try:
        return [GenerationRecord.from_record(rec) for _, rec in read_jsonl(path)]
    except OSError as exc:
        raise DataError(f"cannot read records {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"malformed records file {path}: {exc}") from exc
