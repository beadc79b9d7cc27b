"""Metric tests: worked values for every formula, the frozen hand-worked
fixture, invariant properties, and oracle equivalence on random instances."""

import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vecpress.errors import ConfigError, EmptyQrels, GridMismatch, NoRelevant
from vecpress.io import Qrels, RunRanking
from vecpress.metrics import (
    DEFAULT_KS,
    METRICS,
    MetricReport,
    delta,
    evaluate,
    map_at_k,
    mrr_at_k,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
)

from reference import ref_evaluate

HANDWORKED = Path(__file__).parent / "data" / "handworked"


def make_run(rankings: dict[str, list[str]]) -> RunRanking:
    return RunRanking(
        rankings={
            qid: [(doc, float(len(docs) - i)) for i, doc in enumerate(docs)]
            for qid, docs in rankings.items()
        }
    )


class TestPrecision:
    def test_two_of_five(self):
        ranked = ["a", "b", "c", "d", "e"]
        assert precision_at_k(ranked, {"a", "d"}, 5) == 0.4

    def test_none_relevant(self):
        assert precision_at_k(["a", "b"], {"z"}, 2) == 0.0

    def test_short_list_keeps_k_denominator(self):
        assert precision_at_k(["a", "b", "c"], {"a", "b"}, 10) == 0.2

    def test_k_below_one_rejected(self):
        with pytest.raises(ConfigError):
            precision_at_k(["a"], {"a"}, 0)


class TestRecall:
    def test_all_found(self):
        assert recall_at_k(["a", "b", "c"], {"a", "b"}, 3) == 1.0

    def test_one_of_four(self):
        assert recall_at_k(["a", "x", "y"], {"a", "b", "c", "d"}, 3) == 0.25

    def test_two_of_three(self):
        ranked = ["a", "x", "b"] + [f"f{i}" for i in range(7)]
        assert recall_at_k(ranked, {"a", "b", "c"}, 10) == pytest.approx(2 / 3)

    def test_no_relevant_raises(self):
        with pytest.raises(NoRelevant):
            recall_at_k(["a"], set(), 1)


class TestMrr:
    def test_first_rank(self):
        assert mrr_at_k(["a", "b"], {"a"}, 2) == 1.0

    def test_rank_three(self):
        assert mrr_at_k(["x", "y", "a"], {"a"}, 3) == pytest.approx(1 / 3)

    def test_beyond_k_scores_zero(self):
        assert mrr_at_k(["x", "y", "a"], {"a"}, 2) == 0.0


class TestMap:
    def test_perfect_pair(self):
        assert map_at_k(["a", "b"], {"a", "b"}, 2) == 1.0

    def test_ranks_one_and_three(self):
        assert map_at_k(["a", "x", "b"], {"a", "b"}, 3) == pytest.approx((1 + 2 / 3) / 2)

    def test_nothing_retrieved(self):
        assert map_at_k(["x", "y"], {"a", "b"}, 2) == 0.0

    def test_full_r_denominator(self):
        # relevant doc "b" sits beyond k; denominator stays 2
        assert map_at_k(["a", "x", "b"], {"a", "b"}, 1) == 0.5

    def test_no_relevant_raises(self):
        with pytest.raises(NoRelevant):
            map_at_k(["a"], set(), 1)


class TestNdcg:
    def test_single_hit_at_top(self):
        assert ndcg_at_k(["a", "x"], {"a": 1}, 2) == 1.0

    def test_single_hit_at_rank_two(self):
        got = ndcg_at_k(["x", "a"], {"a": 1}, 2)
        assert got == pytest.approx(1 / math.log2(3))

    def test_ideal_graded_profile(self):
        grades = {"a": 2, "b": 1, "c": 1}
        assert ndcg_at_k(["a", "b", "c"], grades, 3) == pytest.approx(1.0)

    def test_zero_grades_do_not_count_as_relevant(self):
        with pytest.raises(NoRelevant):
            ndcg_at_k(["a"], {"a": 0}, 1)

    def test_idcg_truncates_at_k(self):
        # two grade-1 docs, k=1: ideal DCG is just the first
        assert ndcg_at_k(["a"], {"a": 1, "b": 1}, 1) == 1.0


class TestEvaluate:
    def test_perfect_single_query(self):
        run = make_run({"q1": ["a", "b"]})
        qrels = Qrels(judgments={"q1": {"a": 1, "b": 1}})
        report = evaluate(run, qrels, ks=[2, 5])
        for metric in METRICS:
            assert report.aggregates[metric][2] == 1.0
        for metric in ("ndcg", "map", "mrr", "recall"):
            assert report.aggregates[metric][5] == 1.0
        assert report.aggregates["precision"][5] == 0.4

    def test_mean_over_queries(self):
        run = make_run({"q1": ["a"], "q2": ["x"]})
        qrels = Qrels(judgments={"q1": {"a": 1}, "q2": {"b": 1}})
        report = evaluate(run, qrels, ks=[1])
        assert report.aggregates["precision"][1] == 0.5

    def test_run_only_queries_ignored(self):
        run = make_run({"q1": ["a"], "q9": ["a"]})
        qrels = Qrels(judgments={"q1": {"a": 1}})
        report = evaluate(run, qrels, ks=[1])
        assert report.evaluated_queries == 1
        assert "q9" not in report.per_query

    def test_qrels_only_queries_score_zero(self):
        run = make_run({"q1": ["a"]})
        qrels = Qrels(judgments={"q1": {"a": 1}, "q2": {"b": 1}})
        report = evaluate(run, qrels, ks=[1])
        assert report.evaluated_queries == 2
        for metric in METRICS:
            assert report.per_query["q2"][metric][1] == 0.0
            assert report.aggregates[metric][1] == 0.5

    def test_zero_grade_queries_excluded(self):
        run = make_run({"q1": ["a"], "q2": ["b"]})
        qrels = Qrels(judgments={"q1": {"a": 1}, "q2": {"b": 0}})
        report = evaluate(run, qrels, ks=[1])
        assert report.evaluated_queries == 1
        assert "q2" not in report.per_query

    def test_ks_sorted_and_deduped(self):
        run = make_run({"q1": ["a"]})
        qrels = Qrels(judgments={"q1": {"a": 1}})
        report = evaluate(run, qrels, ks=[10, 1, 10, 3])
        assert report.ks == [1, 3, 10]

    def test_empty_qrels(self):
        run = make_run({"q1": ["a"]})
        with pytest.raises(EmptyQrels):
            evaluate(run, Qrels(judgments={}), ks=[1])
        with pytest.raises(EmptyQrels):
            evaluate(run, Qrels(judgments={"q1": {"a": 0}}), ks=[1])

    def test_bad_k_grid(self):
        run = make_run({"q1": ["a"]})
        qrels = Qrels(judgments={"q1": {"a": 1}})
        with pytest.raises(ConfigError):
            evaluate(run, qrels, ks=[])
        with pytest.raises(ConfigError):
            evaluate(run, qrels, ks=[0, 5])

    def test_report_dict_round_trip(self):
        run = make_run({"q1": ["a", "x"]})
        qrels = Qrels(judgments={"q1": {"a": 2}})
        report = evaluate(run, qrels, ks=[1, 3])
        back = MetricReport.from_dict(json.loads(json.dumps(report.to_dict())))
        assert back.ks == report.ks
        assert back.aggregates == report.aggregates
        assert back.per_query == report.per_query


class TestHandworkedFixture:
    def load(self):
        from vecpress.io import read_qrels_tsv, read_run

        run = read_run(HANDWORKED / "run.trec")
        qrels = read_qrels_tsv(HANDWORKED / "qrels.tsv")
        expected = json.loads((HANDWORKED / "expected.json").read_text())
        return run, qrels, expected

    def test_matches_frozen_expectations(self):
        run, qrels, expected = self.load()
        report = evaluate(run, qrels, ks=expected["ks"])
        assert report.evaluated_queries == expected["evaluated_queries"]
        for metric, per_k in expected["aggregates"].items():
            for k, value in per_k.items():
                got = report.aggregates[metric][int(k)]
                assert got == pytest.approx(value, abs=1e-12), (metric, k)
        for qid, by_metric in expected["per_query"].items():
            for metric, per_k in by_metric.items():
                for k, value in per_k.items():
                    got = report.per_query[qid][metric][int(k)]
                    assert got == pytest.approx(value, abs=1e-12), (qid, metric, k)

    def test_reciprocal_rank_three(self):
        run, qrels, _ = self.load()
        report = evaluate(run, qrels, ks=[3])
        assert report.per_query["q2"]["mrr"][3] == pytest.approx(1 / 3, abs=1e-15)


class TestDelta:
    def single_metric_report(self, value: float) -> MetricReport:
        return MetricReport(
            ks=[10],
            aggregates={m: {10: value} for m in METRICS},
            per_query={},
        )

    def test_direct_subtraction(self):
        report = delta(self.single_metric_report(0.60), self.single_metric_report(0.65))
        assert report.delta["ndcg"][10] == 0.60 - 0.65

    def test_self_delta_is_exactly_zero(self):
        run = make_run({"q1": ["a", "x", "b"]})
        qrels = Qrels(judgments={"q1": {"a": 2, "b": 1}})
        report = evaluate(run, qrels)
        zero = delta(report, report)
        for metric in METRICS:
            for k in zero.ks:
                assert zero.delta[metric][k] == 0.0

    def test_grid_mismatch(self):
        a = self.single_metric_report(0.5)
        b = MetricReport(ks=[5], aggregates={m: {5: 0.5} for m in METRICS}, per_query={})
        with pytest.raises(GridMismatch):
            delta(a, b)

    def test_metric_set_mismatch(self):
        a = self.single_metric_report(0.5)
        b = MetricReport(ks=[10], aggregates={"ndcg": {10: 0.5}}, per_query={})
        with pytest.raises(GridMismatch):
            delta(a, b)


ranking_strategy = st.lists(
    st.integers(min_value=0, max_value=19), min_size=1, max_size=20, unique=True
)


@st.composite
def judged_instance(draw):
    ranked = [f"d{i:02d}" for i in draw(ranking_strategy)]
    grades = {}
    for i in range(draw(st.integers(min_value=1, max_value=20))):
        grades[f"d{i:02d}"] = draw(st.integers(min_value=0, max_value=2))
    if not any(g > 0 for g in grades.values()):
        grades["d00"] = 1
    k = draw(st.integers(min_value=1, max_value=25))
    return ranked, grades, k


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(judged_instance())
    def test_bounds(self, instance):
        ranked, grades, k = instance
        relevant = {d for d, g in grades.items() if g > 0}
        values = [
            precision_at_k(ranked, relevant, k),
            recall_at_k(ranked, relevant, k),
            mrr_at_k(ranked, relevant, k),
            map_at_k(ranked, relevant, k),
            ndcg_at_k(ranked, grades, k),
        ]
        assert all(0.0 <= v <= 1.0 for v in values)

    @settings(max_examples=150, deadline=None)
    @given(judged_instance())
    def test_recall_and_mrr_monotone_in_k(self, instance):
        ranked, grades, _ = instance
        relevant = {d for d, g in grades.items() if g > 0}
        for lo, hi in zip(range(1, 21), range(2, 22)):
            assert recall_at_k(ranked, relevant, lo) <= recall_at_k(ranked, relevant, hi)
            assert mrr_at_k(ranked, relevant, lo) <= mrr_at_k(ranked, relevant, hi)

    @settings(max_examples=150, deadline=None)
    @given(judged_instance(), st.integers(min_value=0, max_value=18))
    def test_rank_dominance(self, instance, index):
        ranked, grades, k = instance
        if index + 1 >= len(ranked):
            return
        above, below = ranked[index], ranked[index + 1]
        if grades.get(above, 0) > 0 or grades.get(below, 0) <= 0:
            return  # need non-relevant directly above relevant
        promoted = list(ranked)
        promoted[index], promoted[index + 1] = below, above
        relevant = {d for d, g in grades.items() if g > 0}
        assert precision_at_k(promoted, relevant, k) >= precision_at_k(ranked, relevant, k)
        assert recall_at_k(promoted, relevant, k) >= recall_at_k(ranked, relevant, k)
        assert mrr_at_k(promoted, relevant, k) >= mrr_at_k(ranked, relevant, k)
        assert map_at_k(promoted, relevant, k) >= map_at_k(ranked, relevant, k)
        assert ndcg_at_k(promoted, grades, k) >= ndcg_at_k(ranked, grades, k)

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=2**31),
        n_queries=st.integers(min_value=1, max_value=8),
        n_docs=st.integers(min_value=1, max_value=30),
    )
    def test_oracle_equivalence(self, seed, n_queries, n_docs):
        local = np.random.default_rng(seed)
        doc_ids = [f"d{i:03d}" for i in range(n_docs)]
        rankings = {}
        judgments = {}
        for qi in range(n_queries):
            qid = f"q{qi}"
            depth = int(local.integers(0, n_docs + 1))
            order = list(local.permutation(doc_ids))[:depth]
            rankings[qid] = order
            judged = {}
            for doc in doc_ids:
                if local.random() < 0.4:
                    judged[doc] = int(local.integers(0, 3))
            if judged:
                judgments[qid] = judged
        if not any(any(g > 0 for g in d.values()) for d in judgments.values()):
            judgments["q0"] = {doc_ids[0]: 1}
        ks = [1, 3, 5, 10, 25]
        report = evaluate(make_run(rankings), Qrels(judgments=judgments), ks=ks)
        expected = ref_evaluate(rankings, judgments, ks)
        for metric in METRICS:
            for k in ks:
                assert report.aggregates[metric][k] == pytest.approx(
                    expected[metric][k], abs=1e-9
                ), (metric, k)

    def test_default_grid(self):
        assert DEFAULT_KS == (1, 3, 5, 10, 25, 50, 100)
        assert METRICS == ("ndcg", "map", "mrr", "recall", "precision")
