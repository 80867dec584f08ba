import numpy as np
import pytest

from ntkb import (
    ConfigError,
    build_knowledge_base,
    classify,
    evaluate_ranking,
    fit_thresholds,
    generate_negatives,
    rank_right_entity,
    rank_triplets,
    recall_at_k,
)
from ntkb.evaluation import ThresholdTable, _best_threshold

from .conftest import make_params


def oracle_rank(params, triplet):
    """Sort-based rank: stable sort by (-score, id), find the true right."""
    left, rel, right = triplet
    scores = np.array(
        [
            params.plausibility(rel, params.embeddings[left], params.embeddings[e])
            for e in range(params.n_entities)
        ]
    )
    order = sorted(range(len(scores)), key=lambda e: (-scores[e], e))
    return order.index(right) + 1


def test_rank_matches_sort_oracle():
    layout, x, params = make_params("bilinear", 3, 1, 12, 2, seed=0)
    rng = np.random.default_rng(1)
    for _ in range(25):
        t = (int(rng.integers(12)), int(rng.integers(2)), int(rng.integers(12)))
        assert rank_right_entity(params, t) == oracle_rank(params, t)


def test_rank_breaks_ties_by_smaller_id():
    layout, x, params = make_params("bilinear", 3, 1, 6, 1, seed=2)
    # force exact ties: every entity identical, so all scores equal
    params.embeddings[:] = params.embeddings[0]
    for right in range(6):
        assert rank_right_entity(params, (0, 0, right)) == right + 1


def test_rank_counts_strictly_higher_scores():
    layout, x, params = make_params("bilinear", 2, 1, 4, 1, seed=3)
    params.relation[0]["W"][:] = np.eye(2)
    params.embeddings[:] = [[1, 0], [2, 0], [3, 0], [0.5, 0]]
    # scores of (0, r, e) ordered: e2 > e1 > e0 > e3
    assert rank_right_entity(params, (0, 0, 2)) == 1
    assert rank_right_entity(params, (0, 0, 1)) == 2
    assert rank_right_entity(params, (0, 0, 0)) == 3
    assert rank_right_entity(params, (0, 0, 3)) == 4


def test_recall_at_k():
    ranks = np.array([1, 2, 5, 100, 7])
    assert recall_at_k(ranks, 1) == pytest.approx(0.2)
    assert recall_at_k(ranks, 5) == pytest.approx(0.6)
    assert recall_at_k(ranks, 100) == pytest.approx(1.0)
    assert recall_at_k(np.array([]), 10) == 0.0
    with pytest.raises(ConfigError):
        recall_at_k(ranks, 0)


def test_evaluate_ranking_report():
    layout, x, params = make_params("bilinear", 3, 1, 8, 1, seed=4)
    trips = np.array([[0, 0, 1], [2, 0, 3], [4, 0, 5]])
    report = evaluate_ranking(params, trips, k_values=(1, 3))
    assert report.mean_rank == pytest.approx(float(np.mean(report.ranks)))
    assert set(report.recall) == {1, 3}
    text = report.to_text()
    assert "mean_rank\t" in text and "recall@3\t" in text


def test_generate_negatives_are_not_members_and_differ_in_one_field():
    kb = build_knowledge_base(
        train=[(f"e{i}", f"r{i % 2}", f"e{(i + 1) % 8}") for i in range(8)]
    )
    neg = generate_negatives(kb, kb.train, seed=0)
    assert neg.shape == kb.train.shape
    for pos, n in zip(kb.train, neg):
        assert not kb.contains(n)
        assert int(np.sum(pos != n)) == 1


def test_generate_negatives_deterministic():
    kb = build_knowledge_base(train=[("a", "r", "b"), ("b", "r", "c"), ("c", "r", "a")])
    n1 = generate_negatives(kb, kb.train, seed=42)
    n2 = generate_negatives(kb, kb.train, seed=42)
    np.testing.assert_array_equal(n1, n2)
    n3 = generate_negatives(kb, kb.train, seed=43)
    assert not np.array_equal(n1, n3)


def test_generate_negatives_single_relation_never_switches_relation():
    kb = build_knowledge_base(train=[("a", "only", "b"), ("b", "only", "c")])
    neg = generate_negatives(kb, kb.train, seed=5)
    assert (neg[:, 1] == 0).all()


def test_best_threshold_separable():
    pos = np.array([3.0, 4.0, 5.0])
    neg = np.array([0.0, 1.0, 2.0])
    t, acc = _best_threshold(pos, neg)
    assert acc == 1.0
    assert 2.0 < t <= 3.0


def test_best_threshold_matches_exhaustive_scan():
    rng = np.random.default_rng(6)
    for _ in range(30):
        pos = rng.normal(1.0, 1.0, size=int(rng.integers(1, 40)))
        neg = rng.normal(-1.0, 1.0, size=int(rng.integers(1, 40)))
        t, acc = _best_threshold(pos, neg)
        # oracle: accuracy at every candidate drawn from a fine grid over the data
        grid = np.concatenate([[-np.inf, np.inf], np.unique(np.concatenate([pos, neg]))])
        total = len(pos) + len(neg)
        best = max(
            (np.sum(pos >= c) + np.sum(neg < c)) / total for c in grid
        )
        assert acc == pytest.approx(best)
        got = (np.sum(pos >= t) + np.sum(neg < t)) / total
        assert got == pytest.approx(acc)


def test_best_threshold_all_one_class():
    t, acc = _best_threshold(np.array([1.0, 2.0]), np.array([]))
    assert acc == 1.0 and t == -np.inf
    t, acc = _best_threshold(np.array([]), np.array([1.0, 2.0]))
    assert acc == 1.0 and t == np.inf


def test_fit_thresholds_per_relation_and_absent_fallback():
    layout, x, params = make_params("bilinear", 3, 1, 10, 3, seed=7)
    rng = np.random.default_rng(8)
    # dev rows touch relations 0 and 1 only; relation 2 must fall back
    pos = np.column_stack(
        [rng.integers(0, 10, 12), rng.integers(0, 2, 12), rng.integers(0, 10, 12)]
    )
    neg = np.column_stack(
        [rng.integers(0, 10, 12), rng.integers(0, 2, 12), rng.integers(0, 10, 12)]
    )
    table = fit_thresholds(params, pos, neg)
    assert table.n_relations == 3
    scores = np.concatenate(
        [params.plausibility_triplets(pos), params.plausibility_triplets(neg)]
    )
    assert table.threshold(2) == pytest.approx(float(np.median(scores)))
    assert np.isnan(table.dev_accuracy[2])
    assert not np.isnan(table.dev_accuracy[0])


def test_classify_reports_accuracy_and_breakdown():
    layout, x, params = make_params("bilinear", 3, 1, 6, 2, seed=9)
    pos = np.array([[0, 0, 1], [2, 1, 3]])
    neg = np.array([[1, 0, 0], [3, 1, 2]])
    table = ThresholdTable(
        thresholds=np.array([-np.inf, np.inf]), dev_accuracy=np.array([1.0, 1.0])
    )
    report = classify(params, table, pos, neg)
    # -inf threshold accepts everything (pos right, neg wrong); +inf rejects everything
    assert report.per_relation[0] == pytest.approx(0.5)
    assert report.per_relation[1] == pytest.approx(0.5)
    assert report.accuracy == pytest.approx(0.5)
    assert report.n_positive == 2 and report.n_negative == 2
    text = report.to_text(relation_names=["alpha", "beta"])
    assert "accuracy[alpha]\t" in text


def test_classify_positive_on_threshold_counts_true():
    layout, x, params = make_params("bilinear", 2, 1, 3, 1, seed=10)
    pos = np.array([[0, 0, 1]])
    score = params.plausibility_triplets(pos)[0]
    table = ThresholdTable(thresholds=np.array([score]), dev_accuracy=np.array([1.0]))
    report = classify(params, table, pos, np.empty((0, 3), dtype=np.int64))
    assert report.accuracy == 1.0
