"""Rank-based IR evaluation: Precision@k, Recall@k, MRR@k, MAP@k, nDCG@k over
a RunRanking against Qrels, plus performance deltas against a baseline.

Conventions follow standard trec-eval behavior: Precision@k always divides by
k even when fewer documents were retrieved; MAP@k divides by the full count
of relevant documents R, not min(R, k); nDCG uses linear gain grade/log2(i+1)
with the ideal DCG truncated at k; aggregation averages only over queries
that have at least one positive judgment, so recall is always defined.
Queries present only in the run are ignored; queries present only in the
qrels contribute zeros. All aggregation is in 64-bit floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyQrels, GridMismatch, NoRelevant
from .io import Qrels, RunRanking

METRICS = ("ndcg", "map", "mrr", "recall", "precision")
DEFAULT_KS = (1, 3, 5, 10, 25, 50, 100)


def precision_at_k(ranked_ids: list[str], relevant: set[str], k: int) -> float:
    """|relevant in top-k| / k; the denominator stays k for short lists."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    return sum(1 for d in ranked_ids[:k] if d in relevant) / k


def recall_at_k(ranked_ids: list[str], relevant: set[str], k: int) -> float:
    """|relevant in top-k| / |relevant|."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if not relevant:
        raise NoRelevant("recall undefined for a query with no relevant docs")
    return sum(1 for d in ranked_ids[:k] if d in relevant) / len(relevant)


def mrr_at_k(ranked_ids: list[str], relevant: set[str], k: int) -> float:
    """1/rank of the first relevant doc within the top-k, else 0."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    for rank, doc_id in enumerate(ranked_ids[:k], start=1):
        if doc_id in relevant:
            return 1.0 / rank
    return 0.0


def map_at_k(ranked_ids: list[str], relevant: set[str], k: int) -> float:
    """Average precision with the numerator cut at k and the full relevant
    count R in the denominator."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if not relevant:
        raise NoRelevant("average precision undefined for a query with no relevant docs")
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(ranked_ids[:k], start=1):
        if doc_id in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def ndcg_at_k(ranked_ids: list[str], grades: dict[str, int], k: int) -> float:
    """DCG@k / IDCG@k with linear gain grade/log2(rank+1); the ideal ranking
    sorts positive grades descending and truncates at k."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    positive = sorted((g for g in grades.values() if g > 0), reverse=True)
    if not positive:
        raise NoRelevant("ndcg undefined for a query with no positive grades")
    dcg = 0.0
    for rank, doc_id in enumerate(ranked_ids[:k], start=1):
        dcg += grades.get(doc_id, 0) / math.log2(rank + 1)
    idcg = 0.0
    for rank, grade in enumerate(positive[:k], start=1):
        idcg += grade / math.log2(rank + 1)
    return dcg / idcg


@dataclass
class MetricReport:
    """Aggregate and per-query scores on a sorted ascending k grid."""

    ks: list[int]
    aggregates: dict[str, dict[int, float]]
    per_query: dict[str, dict[str, dict[int, float]]]

    @property
    def evaluated_queries(self) -> int:
        return len(self.per_query)

    def to_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "evaluated_queries": self.evaluated_queries,
            "aggregates": {
                m: {str(k): v for k, v in per_k.items()}
                for m, per_k in self.aggregates.items()
            },
            "per_query": {
                qid: {m: {str(k): v for k, v in per_k.items()} for m, per_k in by_metric.items()}
                for qid, by_metric in self.per_query.items()
            },
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MetricReport":
        return cls(
            ks=[int(k) for k in obj["ks"]],
            aggregates={
                m: {int(k): float(v) for k, v in per_k.items()}
                for m, per_k in obj["aggregates"].items()
            },
            per_query={
                qid: {m: {int(k): float(v) for k, v in per_k.items()} for m, per_k in by_metric.items()}
                for qid, by_metric in obj["per_query"].items()
            },
        )


@dataclass
class DeltaReport:
    """Per metric and k: method score, baseline score, delta = method - baseline."""

    ks: list[int]
    method: dict[str, dict[int, float]]
    baseline: dict[str, dict[int, float]]
    delta: dict[str, dict[int, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def flat(d):
            return {m: {str(k): v for k, v in per_k.items()} for m, per_k in d.items()}

        return {
            "ks": list(self.ks),
            "method": flat(self.method),
            "baseline": flat(self.baseline),
            "delta": flat(self.delta),
        }


def evaluate(run: RunRanking, qrels: Qrels, ks: list[int] | tuple[int, ...] = DEFAULT_KS) -> MetricReport:
    """All five metrics at every cutoff, averaged over the queries that carry
    at least one positive judgment."""
    if not ks:
        raise ConfigError("k grid must be non-empty")
    grid = sorted(set(int(k) for k in ks))
    if grid[0] < 1:
        raise ConfigError(f"every k must be >= 1, got {grid[0]}")

    evaluated = sorted(
        qid for qid, docs in qrels.judgments.items() if any(g > 0 for g in docs.values())
    )
    if not evaluated:
        raise EmptyQrels("qrels contain no query with a positive judgment")

    per_query: dict[str, dict[str, dict[int, float]]] = {}
    for qid in evaluated:
        grades = qrels.judgments[qid]
        relevant = {d for d, g in grades.items() if g > 0}
        ranked = [doc_id for doc_id, _ in run.rankings.get(qid, [])]
        scores: dict[str, dict[int, float]] = {m: {} for m in METRICS}
        for k in grid:
            scores["ndcg"][k] = ndcg_at_k(ranked, grades, k)
            scores["map"][k] = map_at_k(ranked, relevant, k)
            scores["mrr"][k] = mrr_at_k(ranked, relevant, k)
            scores["recall"][k] = recall_at_k(ranked, relevant, k)
            scores["precision"][k] = precision_at_k(ranked, relevant, k)
        per_query[qid] = scores

    aggregates = {
        m: {
            k: float(np.mean(np.array([per_query[q][m][k] for q in evaluated], dtype=np.float64)))
            for k in grid
        }
        for m in METRICS
    }
    return MetricReport(ks=grid, aggregates=aggregates, per_query=per_query)


def delta(method: MetricReport, baseline: MetricReport) -> DeltaReport:
    """Component-wise method - baseline over identical metric/k grids."""
    if method.ks != baseline.ks:
        raise GridMismatch(f"k grids differ: {method.ks} vs {baseline.ks}")
    if set(method.aggregates) != set(baseline.aggregates):
        raise GridMismatch("metric sets differ")
    diff = {
        m: {k: method.aggregates[m][k] - baseline.aggregates[m][k] for k in method.ks}
        for m in METRICS
        if m in method.aggregates
    }
    return DeltaReport(
        ks=list(method.ks),
        method={m: dict(per_k) for m, per_k in method.aggregates.items()},
        baseline={m: dict(per_k) for m, per_k in baseline.aggregates.items()},
        delta=diff,
    )
