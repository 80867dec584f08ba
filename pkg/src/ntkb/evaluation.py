"""Ranking and threshold-classification evaluation protocols.

Ranking: for a test triplet (e1, R, e2), score every entity as the right
argument and report the 1-based rank of e2, ties broken by entity id.  No
other known-true answers are filtered out; the aggregate recall@K absorbs
the resulting haircut.

Classification: per-relation decision thresholds are fit on a development
fold of positives plus generated negatives, then applied to a test fold.
A triplet is predicted true iff its plausibility is >= its relation's
threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .models import ModelParams


def rank_right_entity(params: ModelParams, triplet, kb=None) -> int:
    """Rank of the true right entity among all entities, best rank 1.

    rank = 1 + #{entities scoring strictly higher}
             + #{equal scorers with a smaller id}.
    """
    left, rel, right = (int(v) for v in np.asarray(triplet).reshape(3))
    scores = params.plausibility_sweep(rel, params.embeddings[left])
    target = scores[right]
    higher = int(np.sum(scores > target))
    tied_before = int(np.sum((scores == target) & (np.arange(len(scores)) < right)))
    return 1 + higher + tied_before


def rank_triplets(params: ModelParams, triplets) -> np.ndarray:
    triplets = np.asarray(triplets).reshape(-1, 3)
    return np.array([rank_right_entity(params, t) for t in triplets], dtype=np.int64)


def recall_at_k(ranks, k: int) -> float:
    """Fraction of ranks <= k."""
    if k < 1:
        raise ConfigError("recall cutoff k must be >= 1")
    ranks = np.asarray(ranks)
    if ranks.size == 0:
        return 0.0
    return float(np.mean(ranks <= k))


@dataclass
class RankingReport:
    ranks: np.ndarray
    k_values: tuple
    recall: dict
    mean_rank: float

    def to_text(self) -> str:
        lines = [f"mean_rank\t{self.mean_rank:.6g}"]
        for k in self.k_values:
            lines.append(f"recall@{k}\t{self.recall[k]:.6g}")
        return "\n".join(lines) + "\n"


def evaluate_ranking(params: ModelParams, triplets, k_values=(100,)) -> RankingReport:
    ranks = rank_triplets(params, triplets)
    k_values = tuple(int(k) for k in k_values)
    recall = {k: recall_at_k(ranks, k) for k in k_values}
    mean_rank = float(np.mean(ranks)) if ranks.size else float("nan")
    return RankingReport(ranks=ranks, k_values=k_values, recall=recall, mean_rank=mean_rank)


def generate_negatives(kb, positives, seed) -> np.ndarray:
    """One presumed-false triplet per positive, by switching one field.

    Each attempt picks the field (left entity, right entity, or relation)
    uniformly among those with at least two possible values, replaces it
    with a uniform different value, and retries (at most 100 times) while
    the result is a known KB member.  Deterministic given the seed.
    """
    if kb.n_entities < 2:
        raise ConfigError("negative generation needs at least 2 entities")
    positives = np.asarray(positives).reshape(-1, 3)
    rng = np.random.default_rng(seed)
    fields = [0, 2] if kb.n_relations < 2 else [0, 2, 1]
    domain = {0: kb.n_entities, 2: kb.n_entities, 1: kb.n_relations}
    out = np.empty_like(positives)
    for i, row in enumerate(positives):
        candidate = tuple(int(v) for v in row)
        for _ in range(100):
            field = fields[int(rng.integers(0, len(fields)))]
            current = int(row[field])
            value = int(rng.integers(0, domain[field] - 1))
            if value >= current:
                value += 1
            candidate = tuple(
                value if j == field else int(row[j]) for j in range(3)
            )
            if candidate not in kb.members:
                break
        out[i] = candidate
    return out


@dataclass
class ThresholdTable:
    """Per-relation decision thresholds with the dev accuracy each achieved.

    Relations without development examples carry the global median
    plausibility and a NaN accuracy.
    """

    thresholds: np.ndarray
    dev_accuracy: np.ndarray

    @property
    def n_relations(self) -> int:
        return len(self.thresholds)

    def threshold(self, rel: int) -> float:
        return float(self.thresholds[rel])


def _best_threshold(pos_scores, neg_scores):
    """Exact accuracy-maximizing threshold; ties go to the smallest value."""
    values = np.unique(np.concatenate([pos_scores, neg_scores]))
    candidates = np.concatenate(
        [[-np.inf], (values[:-1] + values[1:]) / 2.0, [np.inf]]
    )
    total = len(pos_scores) + len(neg_scores)
    best_t, best_acc = -np.inf, -1.0
    for t in candidates:
        acc = (np.sum(pos_scores >= t) + np.sum(neg_scores < t)) / total
        if acc > best_acc:
            best_t, best_acc = float(t), float(acc)
    return best_t, best_acc


def fit_thresholds(params: ModelParams, dev_pos, dev_neg) -> ThresholdTable:
    """Fit one threshold per relation on dev positives and negatives.

    Candidates are midpoints between consecutive distinct scores plus the
    two infinite sentinels, which cover every achievable dev labeling.
    Negatives belong to the relation they themselves name (a negative built
    by switching the relation counts toward the new relation).
    """
    dev_pos = np.asarray(dev_pos).reshape(-1, 3)
    dev_neg = np.asarray(dev_neg).reshape(-1, 3)
    pos_scores = params.plausibility_triplets(dev_pos)
    neg_scores = params.plausibility_triplets(dev_neg)
    all_scores = np.concatenate([pos_scores, neg_scores])
    global_median = float(np.median(all_scores)) if all_scores.size else 0.0
    n_rel = params.n_relations
    thresholds = np.empty(n_rel, dtype=np.float64)
    accuracy = np.full(n_rel, np.nan)
    for r in range(n_rel):
        sp = pos_scores[dev_pos[:, 1] == r]
        sn = neg_scores[dev_neg[:, 1] == r]
        if sp.size + sn.size == 0:
            thresholds[r] = global_median
            continue
        thresholds[r], accuracy[r] = _best_threshold(sp, sn)
    return ThresholdTable(thresholds=thresholds, dev_accuracy=accuracy)


@dataclass
class ClassificationReport:
    accuracy: float
    per_relation: dict
    n_positive: int
    n_negative: int

    def to_text(self, relation_names=None) -> str:
        lines = [
            f"accuracy\t{self.accuracy:.6g}",
            f"n_positive\t{self.n_positive}",
            f"n_negative\t{self.n_negative}",
        ]
        for rel in sorted(self.per_relation):
            name = relation_names[rel] if relation_names is not None else str(rel)
            lines.append(f"accuracy[{name}]\t{self.per_relation[rel]:.6g}")
        return "\n".join(lines) + "\n"


def classify(params: ModelParams, table: ThresholdTable, test_pos, test_neg) -> ClassificationReport:
    """Accuracy of threshold classification over positives and negatives."""
    test_pos = np.asarray(test_pos).reshape(-1, 3)
    test_neg = np.asarray(test_neg).reshape(-1, 3)
    sp = params.plausibility_triplets(test_pos)
    sn = params.plausibility_triplets(test_neg)
    pred_pos = sp >= table.thresholds[test_pos[:, 1]]
    pred_neg = sn >= table.thresholds[test_neg[:, 1]]
    correct = np.concatenate([pred_pos, ~pred_neg])
    rels = np.concatenate([test_pos[:, 1], test_neg[:, 1]])
    total = len(correct)
    accuracy = float(np.mean(correct)) if total else float("nan")
    per_relation = {
        int(r): float(np.mean(correct[rels == r])) for r in np.unique(rels)
    }
    return ClassificationReport(
        accuracy=accuracy,
        per_relation=per_relation,
        n_positive=len(test_pos),
        n_negative=len(test_neg),
    )
