"""Retrieval effectiveness measures and the paired randomization test."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

RECALL_LEVELS = tuple(i / 10 for i in range(11))
SIGNIFICANCE_LEVEL = 0.05
DEFAULT_DEPTH = 1000


@dataclass(frozen=True)
class QueryEval:
    topic: int
    ap: float
    interp_precision: tuple[float, ...]
    num_relevant: int
    num_retrieved: int

    @property
    def f_measure(self) -> tuple[float, ...]:
        return tuple(f_measure(p, r) for p, r in zip(self.interp_precision, RECALL_LEVELS))


@dataclass(frozen=True)
class RandTestResult:
    observed_diff: float
    n_minus: int
    n_plus: int
    n_perms: int
    exhaustive: bool

    @property
    def p_two_sided(self) -> float:
        return (self.n_minus + self.n_plus) / self.n_perms

    @property
    def significant(self) -> bool:
        return self.p_two_sided < SIGNIFICANCE_LEVEL


@dataclass
class EvalReport:
    per_query: list[QueryEval]
    excluded: list[int] = field(default_factory=list)

    @property
    def map(self) -> float:
        return mean_average_precision(self.per_query)

    @property
    def interp_precision(self) -> tuple[float, ...]:
        return tuple(float(np.mean([q.interp_precision[i] for q in self.per_query]))
                     for i in range(len(RECALL_LEVELS)))

    @property
    def f_measure(self) -> tuple[float, ...]:
        """Per-query F at each recall level, averaged over queries."""
        return tuple(float(np.mean([q.f_measure[i] for q in self.per_query]))
                     for i in range(len(RECALL_LEVELS)))

    def ap_by_topic(self) -> dict[int, float]:
        return {q.topic: q.ap for q in self.per_query}


def _check_relevant(relevant) -> None:
    if not relevant:
        raise ValueError("relevant set is empty")


def average_precision(ranking: Sequence[str], relevant) -> float:
    _check_relevant(relevant)
    hits = 0
    total = 0.0
    for r, docno in enumerate(ranking, start=1):
        if docno in relevant:
            hits += 1
            total += hits / r
    return total / len(relevant)


def interpolated_precision_11pt(ranking: Sequence[str], relevant) -> tuple[float, ...]:
    _check_relevant(relevant)
    n_rel = len(relevant)
    points = []  # (recall, precision) at every cutoff
    hits = 0
    for r, docno in enumerate(ranking, start=1):
        if docno in relevant:
            hits += 1
        points.append((hits / n_rel, hits / r))
    out = []
    for level in RECALL_LEVELS:
        # tiny slack so 0.3 reached as 3/10 is not lost to float rounding
        eligible = [p for rec, p in points if rec >= level - 1e-12]
        out.append(max(eligible, default=0.0))
    return tuple(out)


def f_measure(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def mean_average_precision(per_query: Sequence[QueryEval]) -> float:
    if not per_query:
        raise ValueError("no queries to average")
    return sum(q.ap for q in per_query) / len(per_query)


def evaluate_topic(topic: int, ranking: Sequence[str], relevant, depth: int | None = DEFAULT_DEPTH) -> QueryEval:
    if depth is not None:
        ranking = list(ranking)[:depth]
    return QueryEval(topic, average_precision(ranking, relevant),
                     interpolated_precision_11pt(ranking, relevant), len(relevant), len(ranking))


def evaluate_run(
    run: Mapping[int, Sequence[str]],
    relevant: Mapping[int, set],
    depth: int | None = DEFAULT_DEPTH,
    topics: Sequence[int] | None = None,
) -> EvalReport:
    """Score each topic's ranking against its relevant set.

    ``topics`` fixes the evaluated topic list (a topic missing from ``run``
    then scores as an empty ranking); by default the run's own topics are used.
    Topics without any relevant document are dropped with a warning.
    """
    wanted = sorted(topics if topics is not None else run)
    per_query, excluded = [], []
    for topic in wanted:
        rel = relevant.get(topic)
        if not rel:
            excluded.append(topic)
            continue
        per_query.append(evaluate_topic(topic, run.get(topic, []), rel, depth))
    if excluded:
        log.warning("topics without relevant documents excluded: %s", " ".join(map(str, excluded)))
    if not per_query:
        raise ValueError("no run topic has relevance judgments")
    return EvalReport(per_query, excluded)


def improvement(map_a: float, map_b: float) -> float:
    """Relative gain of A over B, as a fraction."""
    return (map_a - map_b) / map_b


def _tail_counts(perm_diffs: np.ndarray, observed: float) -> tuple[int, int]:
    bound = abs(observed)
    eps = 1e-12 * max(1.0, bound)
    low = perm_diffs <= -bound + eps
    high = (perm_diffs >= bound - eps) & ~low
    return int(low.sum()), int(high.sum())


def randomization_test(
    ap_a: Sequence[float],
    ap_b: Sequence[float],
    n_perms: int = 100_000,
    seed: int | None = 0,
    exhaustive: bool | None = None,
    batch: int = 20_000,
) -> RandTestResult:
    """Two-sided paired randomization test on the difference of mean AP.

    Each permutation swaps the A/B labels of every topic with probability 1/2.
    With ``exhaustive=None`` all 2**n assignments are enumerated whenever
    that is no more than ``n_perms``; otherwise ``n_perms`` assignments are
    sampled from ``seed``.  A permutation landing on either tail boundary is
    counted once, so the p-value never exceeds 1.
    """
    a = np.asarray(ap_a, dtype=float)
    b = np.asarray(ap_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("AP vectors must be one-dimensional and aligned")
    n = a.size
    if n == 0:
        raise ValueError("need at least one topic")
    if n_perms < 1:
        raise ValueError("n_perms must be positive")
    d = a - b
    observed = float(d.mean())
    if exhaustive is None:
        exhaustive = n < 63 and 2 ** n <= n_perms
    n_minus = n_plus = 0
    if exhaustive:
        if n > 24:
            raise ValueError(f"exhaustive enumeration of 2**{n} assignments is not feasible")
        total = 2 ** n
        for start in range(0, total, batch):
            codes = np.arange(start, min(total, start + batch), dtype=np.int64)
            bits = (codes[:, None] >> np.arange(n)) & 1
            signs = 1 - 2 * bits
            lo, hi = _tail_counts(signs @ d / n, observed)
            n_minus += lo
            n_plus += hi
        return RandTestResult(observed, n_minus, n_plus, total, True)
    rng = np.random.default_rng(seed)
    done = 0
    while done < n_perms:
        size = min(batch, n_perms - done)
        signs = rng.choice(np.array([-1.0, 1.0]), size=(size, n))
        lo, hi = _tail_counts(signs @ d / n, observed)
        n_minus += lo
        n_plus += hi
        done += size
    return RandTestResult(observed, n_minus, n_plus, n_perms, False)


def align_topics(*reports: EvalReport) -> list[int]:
    common = set(reports[0].ap_by_topic())
    for rep in reports[1:]:
        common &= set(rep.ap_by_topic())
    return sorted(common)


# ---------------------------------------------------------------------------
# report formatting

def _pct(x: float) -> str:
    return f"{100 * x:.0f}"


def format_recall_table(reports: Mapping[str, EvalReport]) -> str:
    header = "Measure\tModel\t" + "\t".join(f"{int(r * 100)}" for r in RECALL_LEVELS)
    lines = [header]
    for label, attr in (("Precision (%)", "interp_precision"), ("F-measure (%)", "f_measure")):
        for model, rep in reports.items():
            values = getattr(rep, attr)
            lines.append(f"{label}\t{model}\t" + "\t".join(_pct(v) for v in values))
    return "\n".join(lines) + "\n"


def format_map_table(reports: Mapping[str, EvalReport], reference: str | None = None) -> str:
    models = list(reports)
    lines = ["Model\t" + "\t".join(models), "MAP\t" + "\t".join(f"{reports[m].map:.4f}" for m in models)]
    if reference is not None:
        ref_map = reports[reference].map
        cells = []
        for m in models:
            if m == reference or reports[m].map == 0:
                cells.append("")
            else:
                cells.append(f"{100 * improvement(ref_map, reports[m].map):.1f}%")
        lines.append(f"Improvement of {reference}\t" + "\t".join(cells))
    return "\n".join(lines) + "\n"


def format_sigtest_table(model_a: str, results: Mapping[str, RandTestResult]) -> str:
    lines = ["Model A\tModel B\t|MAP(A) - MAP(B)|\tN-\tN+\tTwo-Sided P-Value\tSignificant"]
    for model_b, res in results.items():
        flag = "significant" if res.significant else "not significant"
        lines.append(f"{model_a}\t{model_b}\t{abs(res.observed_diff):.4f}\t{res.n_minus}\t{res.n_plus}\t"
                     f"{res.p_two_sided:.5f}\t{flag}")
    return "\n".join(lines) + "\n"


def format_per_query(report: EvalReport) -> str:
    lines = []
    for q in report.per_query:
        lines.append(f"{q.topic}\t{q.ap:.6f}\t" + "\t".join(f"{p:.6f}" for p in q.interp_precision))
    return "\n".join(lines) + "\n"
