"""Distribution-shift statistics between original and generated problems.

Three per-text metrics (token count, vocabulary entropy in nats, mean
tokens per sentence) are compared with Welch's unequal-variance two-sided
t-test at significance level 0.001.  The Student-t survival function is
evaluated through the regularized incomplete beta function, implemented
here with the standard continued-fraction expansion so the package needs
no statistics dependency; the test suite cross-checks it against an
independent reference implementation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from solverank.corpus import Problem, tokenize
from solverank.errors import DataError
from solverank.synth import SyntheticVariant

SIGNIFICANCE_ALPHA = 0.001

_SENTENCE_SPLIT_RE = re.compile(r"[.!?]")

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-15
_BETACF_FPMIN = 1e-300


def vocabulary_entropy(texts: list[str]) -> float:
    """Mean Shannon entropy (natural log) of token frequencies per text.

    H(text) = -sum_w p(w) ln p(w) over the text's token relative
    frequencies; bounded by ln(number of distinct tokens).
    """
    if not texts:
        raise DataError("vocabulary_entropy needs at least one text")
    total = 0.0
    for text in texts:
        total += _text_entropy(text)
    return total / len(texts)


def _text_entropy(text: str) -> float:
    tokens = tokenize(text)
    if not tokens:
        raise DataError("cannot compute entropy of a text with no tokens")
    counts: dict[str, int] = {}
    for tok in tokens:
        counts[tok] = counts.get(tok, 0) + 1
    n = float(len(tokens))
    h = 0.0
    for c in counts.values():
        p = c / n
        h -= p * math.log(p)
    return h


def mean_sentence_length(text: str) -> float:
    """Mean tokens per sentence; sentences split on '.', '!', '?'.

    Fragments with no tokens (consecutive terminators, trailing space) are
    ignored; a text with no terminator is one sentence.
    """
    lengths = [
        len(tokenize(fragment)) for fragment in _SENTENCE_SPLIT_RE.split(text)
    ]
    lengths = [n for n in lengths if n > 0]
    if not lengths:
        return 0.0
    return sum(lengths) / len(lengths)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_FPMIN:
        d = _BETACF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_FPMIN:
            d = _BETACF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETACF_FPMIN:
            c = _BETACF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_FPMIN:
            d = _BETACF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETACF_FPMIN:
            c = _BETACF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise DataError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """P(|T_df| >= |t|) via I_{df/(df+t^2)}(df/2, 1/2)."""
    if df <= 0:
        raise DataError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    p = betainc_reg(df / 2.0, 0.5, x)
    return min(1.0, max(0.0, p))


def welch_t_test(sample_a: list[float], sample_b: list[float]) -> tuple[float, float]:
    """Welch's unequal-variance t-test; returns (t, two-sided p).

    Uses the Welch-Satterthwaite degrees of freedom.  Degenerate inputs
    follow the documented conventions: both variances zero gives p = 1 for
    equal means and p = 0 (t = +/-inf) otherwise.
    """
    n1, n2 = len(sample_a), len(sample_b)
    if n1 < 2 or n2 < 2:
        raise DataError("welch_t_test needs at least two values per sample")
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    m1, m2 = float(np.mean(a)), float(np.mean(b))
    v1 = float(np.var(a, ddof=1)) / n1
    v2 = float(np.var(b, ddof=1)) / n2
    if v1 == 0.0 and v2 == 0.0:
        if m1 == m2:
            return 0.0, 1.0
        return math.copysign(math.inf, m1 - m2), 0.0
    t = (m1 - m2) / math.sqrt(v1 + v2)
    df = (v1 + v2) ** 2 / (
        (v1 * v1) / (n1 - 1) + (v2 * v2) / (n2 - 1)
    )
    return t, student_t_two_sided_p(t, df)


@dataclass
class StatsRow:
    metric: str
    original_mean: float
    generated_mean: float
    p_value: float
    significant: bool

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise DataError(f"p-value {self.p_value} outside [0, 1]")
        if self.significant != (self.p_value < SIGNIFICANCE_ALPHA):
            raise DataError("significance flag inconsistent with p-value")


@dataclass
class StatsReport:
    rows: list[StatsRow]

    def to_json(self) -> dict:
        return {
            "alpha": SIGNIFICANCE_ALPHA,
            "rows": [
                {
                    "metric": r.metric,
                    "original_mean": r.original_mean,
                    "generated_mean": r.generated_mean,
                    "p_value": r.p_value,
                    "significant": r.significant,
                }
                for r in self.rows
            ],
        }

    def to_text(self) -> str:
        header = f"{'metric':<20} {'original':>12} {'generated':>12} {'p-value':>12} {'significant':>12}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            p_repr = f"{r.p_value:.3g}" if r.p_value >= 1e-12 else "< 1e-12"
            lines.append(
                f"{r.metric:<20} {r.original_mean:>12.3f} {r.generated_mean:>12.3f} "
                f"{p_repr:>12} {str(r.significant).lower():>12}"
            )
        return "\n".join(lines)


def compute_stats(
    originals: list[Problem], generated: list[SyntheticVariant]
) -> StatsReport:
    """Compare original statements against generated variant texts."""
    if not originals or not generated:
        raise DataError("compute_stats needs nonempty original and generated sets")
    texts_a = [p.statement for p in originals]
    texts_b = [v.text for v in generated]
    metrics = [
        ("prompt_length", lambda text: float(len(tokenize(text)))),
        ("vocabulary_entropy", _text_entropy),
        ("sentence_length", mean_sentence_length),
    ]
    rows = []
    for name, fn in metrics:
        vals_a = [fn(t) for t in texts_a]
        vals_b = [fn(t) for t in texts_b]
        _t, p = welch_t_test(vals_a, vals_b)
        rows.append(
            StatsRow(
                metric=name,
                original_mean=float(np.mean(vals_a)),
                generated_mean=float(np.mean(vals_b)),
                p_value=p,
                significant=p < SIGNIFICANCE_ALPHA,
            )
        )
    return StatsReport(rows)
