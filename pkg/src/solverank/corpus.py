"""Problem corpus: line-delimited JSON ingestion, tokenization, difficulty bins.

One JSON object per line with keys ``id`` and ``statement`` (required) and
``input_spec``, ``output_spec``, ``notes``, ``samples``, ``code``, ``lang``,
``difficulty``, ``tags`` (optional).  Unknown keys are ignored so corpora
exported from richer schemas load unchanged.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from solverank.errors import DataError

log = logging.getLogger(__name__)

# Unicode alphanumeric runs, underscore excluded (it is the bigram joiner
# downstream and must never appear inside a token).
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

DEFAULT_DIFFICULTY_BOUNDS = (1400, 2000)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on maximal runs of non-alphanumeric characters.

    Digits are kept; the result may be empty.  Idempotent under re-joining
    with spaces.  Shared by the BM25 index and the feature hasher so sparse
    and dense retrieval see the same vocabulary.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass
class Problem:
    """One competitive-programming task with its reference solution."""

    id: str
    statement: str
    input_spec: str = ""
    output_spec: str = ""
    notes: str = ""
    samples: list[tuple[str, str]] = field(default_factory=list)
    code: str = ""
    language_tag: str = ""
    difficulty: int = 0
    tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.id:
            raise DataError("problem id must be nonempty")
        if not self.statement:
            raise DataError(f"problem {self.id!r}: statement must be nonempty")
        if self.difficulty < 0:
            raise DataError(f"problem {self.id!r}: difficulty must be >= 0")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "statement": self.statement,
            "input_spec": self.input_spec,
            "output_spec": self.output_spec,
            "notes": self.notes,
            "samples": [{"input": i, "output": o} for i, o in self.samples],
            "code": self.code,
            "lang": self.language_tag,
            "difficulty": self.difficulty,
            "tags": list(self.tags),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Problem":
        if not isinstance(rec, dict):
            raise DataError("record is not a JSON object")
        for key in ("id", "statement"):
            if not isinstance(rec.get(key), str):
                raise DataError(f"missing or non-string {key!r}")
        difficulty = rec.get("difficulty")
        if difficulty is None:
            log.warning("problem %r has no difficulty; defaulting to 0", rec["id"])
            difficulty = 0
        if not isinstance(difficulty, int) or isinstance(difficulty, bool):
            raise DataError(f"problem {rec['id']!r}: difficulty must be an integer")
        samples_raw = rec.get("samples", [])
        if not isinstance(samples_raw, list):
            raise DataError(f"problem {rec['id']!r}: samples must be an array")
        samples = []
        for s in samples_raw:
            if not isinstance(s, dict) or not isinstance(s.get("input"), str) or not isinstance(s.get("output"), str):
                raise DataError(f"problem {rec['id']!r}: malformed sample entry")
            samples.append((s["input"], s["output"]))
        tags = rec.get("tags", [])
        if not isinstance(tags, list) or any(not isinstance(t, str) for t in tags):
            raise DataError(f"problem {rec['id']!r}: tags must be an array of strings")

        def opt_str(key: str) -> str:
            val = rec.get(key, "")
            if not isinstance(val, str):
                raise DataError(f"problem {rec['id']!r}: {key} must be a string")
            return val

        return cls(
            id=rec["id"],
            statement=rec["statement"],
            input_spec=opt_str("input_spec"),
            output_spec=opt_str("output_spec"),
            notes=opt_str("notes"),
            samples=samples,
            code=opt_str("code"),
            language_tag=opt_str("lang"),
            difficulty=difficulty,
            tags=list(tags),
        )


class Corpus:
    """Ordered, immutable-after-load collection of problems, indexed by id.

    Iteration order is file order; ``id_index`` maps id to position.
    """

    def __init__(self, problems: list[Problem], skipped_lines: int = 0):
        self.problems = list(problems)
        self.id_index: dict[str, int] = {}
        for pos, prob in enumerate(self.problems):
            if prob.id in self.id_index:
                raise DataError(f"duplicate problem id {prob.id!r}")
            self.id_index[prob.id] = pos
        self.skipped_lines = skipped_lines

    def __len__(self) -> int:
        return len(self.problems)

    def __iter__(self):
        return iter(self.problems)

    def __getitem__(self, pos: int) -> Problem:
        return self.problems[pos]

    def __contains__(self, problem_id: str) -> bool:
        return problem_id in self.id_index

    def __eq__(self, other) -> bool:
        return isinstance(other, Corpus) and self.problems == other.problems

    def get(self, problem_id: str) -> Problem:
        try:
            return self.problems[self.id_index[problem_id]]
        except KeyError:
            raise DataError(f"unknown problem id {problem_id!r}") from None

    @property
    def ids(self) -> list[str]:
        return [p.id for p in self.problems]


def load_corpus(path: str, strict: bool = True) -> Corpus:
    """Load a line-delimited corpus file.

    In strict mode any malformed line raises DataError naming the line.  In
    lenient mode malformed lines are skipped; the count is logged and kept
    on ``Corpus.skipped_lines``.  Duplicate ids and an empty result are
    errors in both modes.
    """
    problems: list[Problem] = []
    skipped = 0
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                problems.append(Problem.from_record(rec))
            except (json.JSONDecodeError, DataError) as exc:
                if strict:
                    raise DataError(f"{path}:{lineno}: {exc}") from exc
                skipped += 1
                log.warning("%s:%d: skipping malformed record (%s)", path, lineno, exc)
    if not problems:
        raise DataError(f"corpus file {path} contains no valid records")
    if skipped:
        log.warning("%s: skipped %d malformed line(s)", path, skipped)
    return Corpus(problems, skipped_lines=skipped)


def save_corpus(corpus: Corpus, path: str) -> None:
    """Serialize in load-compatible form; load(save(load(x))) == load(x)."""
    from solverank.util import atomic_write_text, dumps_record

    lines = [dumps_record(p.to_record()) for p in corpus]
    atomic_write_text(path, "\n".join(lines) + "\n")


def split_by_difficulty(
    corpus: Corpus, bounds: tuple[int, int] = DEFAULT_DIFFICULTY_BOUNDS
) -> tuple[Corpus, Corpus, Corpus]:
    """Partition into (easy, medium, hard) bins: D <= lo, lo < D <= hi, D > hi."""
    lo, hi = bounds
    if lo >= hi:
        raise DataError(f"difficulty bounds must satisfy lo < hi, got {bounds}")
    easy, medium, hard = [], [], []
    for p in corpus:
        if p.difficulty <= lo:
            easy.append(p)
        elif p.difficulty <= hi:
            medium.append(p)
        else:
            hard.append(p)
    return Corpus(easy), Corpus(medium), Corpus(hard)


def difficulty_bin_label(difficulty: int, bounds: tuple[int, int] = DEFAULT_DIFFICULTY_BOUNDS) -> str:
    lo, hi = bounds
    if difficulty <= lo:
        return "easy"
    if difficulty <= hi:
        return "medium"
    return "hard"
