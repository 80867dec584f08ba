"""Contrastive max-margin training with corruption sampling.

The objective over a batch B of true triplets is

    J(theta) = sum_{i in B} sum_{c=1..C} max(0, 1 - p(t_i) + p(corrupt_c(t_i)))
               + l2 * ||theta||^2

where p is the model's oriented plausibility, corruptions replace one entity
of t_i with a random entity, and theta is the whole flat parameter vector
(embeddings included).  Corruptions for triplet index i during epoch e come
from a generator seeded by (seed, e, i), so the objective is a fixed
deterministic function within one epoch and a minibatch optimizer can line
search against it.  Setting ``freeze_corruptions`` reuses epoch 0's draws
every epoch, making the objective one fixed function for the whole run.

Each epoch shuffles the training set (seeded), partitions it into
minibatches, and runs a few iterations of the limited-memory quasi-Newton
optimizer per minibatch; a plain SGD fallback is available.  After every
epoch the full-set objective and the dev classification accuracy are
recorded, and the parameters of the best dev epoch are returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericalError
from .flatten import ParameterLayout, init_parameters, unpack
from .kb import KnowledgeBase, Triplet
from .lbfgs import minimize
from .models import MODEL_KINDS, pair_gradient_terms

# Distinct high tags keep auxiliary seed streams (shuffling, dev negatives)
# disjoint from the per-triplet corruption streams keyed (seed, epoch, index).
_SHUFFLE_TAG = 0xFFFFFFFF
_DEV_NEG_TAG = 0xFFFFFFFD


@dataclass
class TrainingConfig:
    """Hyperparameters; the margin is fixed at 1 by the objective itself."""

    model: str = "ntn"
    dim: int = 100
    slices: int = 4
    corruptions: int = 10
    margin: float = 1.0
    l2: float = 1e-4
    batch_size: int = 1000
    epochs: int = 100
    lbfgs_history: int = 5
    lbfgs_inner_iters: int = 10
    lbfgs_max_step: float = 0.5
    corrupt_side: str = "right"
    seed: int = 0
    optimizer: str = "lbfgs"
    sgd_step: float = 0.01
    share_u: bool = False
    freeze_corruptions: bool = False

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind '{self.model}'")
        for name in ("dim", "slices", "corruptions", "batch_size", "epochs",
                     "lbfgs_history", "lbfgs_inner_iters"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.margin != 1.0:
            raise ConfigError("the margin is fixed at 1")
        if self.l2 < 0.0:
            raise ConfigError("l2 must be nonnegative")
        if self.lbfgs_max_step is not None and self.lbfgs_max_step <= 0.0:
            raise ConfigError("lbfgs_max_step must be positive (or None for no cap)")
        if self.corrupt_side not in ("right", "left", "both"):
            raise ConfigError(f"unknown corruption side '{self.corrupt_side}'")
        if self.optimizer not in ("lbfgs", "sgd"):
            raise ConfigError(f"unknown optimizer '{self.optimizer}'")
        if self.share_u and self.model != "ntn":
            raise ConfigError("shared U applies only to the tensor model")

    @property
    def effective_slices(self) -> int:
        return self.slices if self.model == "ntn" else 1

    def layout(self, n_entities: int, n_relations: int) -> ParameterLayout:
        return ParameterLayout(
            kind=self.model,
            dim=self.dim,
            slices=self.effective_slices,
            n_entities=n_entities,
            n_relations=n_relations,
            share_u=self.share_u,
        )


@dataclass(frozen=True)
class CorruptionSample:
    source: Triplet
    entity: int
    side: str


def hinge_term(plausibility_correct: float, plausibility_corrupt: float) -> float:
    """max(0, 1 - p_correct + p_corrupt)."""
    return max(0.0, 1.0 - plausibility_correct + plausibility_corrupt)


def sample_corruptions(kb, triplet, count, side_policy="right", rng=None):
    """Draw ``count`` corrupted entities for one true triplet.

    Each sample replaces one side's entity with a uniform draw over the other
    entities, redrawing (at most 100 times, then accepting) while the
    corrupted triplet is a known member of the KB.  The ``both`` policy
    alternates sides per sample, starting with right.
    """
    if kb.n_entities < 2:
        raise ConfigError("corruption sampling needs at least 2 entities")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    left, rel, right = (int(v) for v in triplet)
    samples = []
    for c in range(count):
        side = side_policy if side_policy != "both" else ("right" if c % 2 == 0 else "left")
        if side not in ("right", "left"):
            raise ConfigError(f"unknown corruption side '{side_policy}'")
        replaced = right if side == "right" else left
        entity = replaced
        for _ in range(100):
            entity = int(rng.integers(0, kb.n_entities - 1))
            if entity >= replaced:
                entity += 1  # uniform over entities != replaced
            candidate = (left, rel, entity) if side == "right" else (entity, rel, right)
            if candidate not in kb.members:
                break
        samples.append(CorruptionSample(Triplet(left, rel, right), entity, side))
    return samples


@dataclass
class _BatchCorruptions:
    """Positive pairs and their C negatives, as aligned id arrays."""

    rel: np.ndarray
    pos_left: np.ndarray
    pos_right: np.ndarray
    neg_left: np.ndarray  # (n, C)
    neg_right: np.ndarray  # (n, C)


def _draw_batch(kb, indices, config, stream_epoch) -> _BatchCorruptions:
    indices = np.asarray(indices)
    n, C = len(indices), config.corruptions
    pos = kb.train[indices]
    neg_left = np.empty((n, C), dtype=np.int64)
    neg_right = np.empty((n, C), dtype=np.int64)
    for row, idx in enumerate(indices):
        rng = np.random.default_rng([config.seed, stream_epoch, int(idx)])
        triplet = tuple(int(v) for v in pos[row])
        for c, s in enumerate(
            sample_corruptions(kb, triplet, C, config.corrupt_side, rng)
        ):
            if s.side == "right":
                neg_left[row, c], neg_right[row, c] = triplet[0], s.entity
            else:
                neg_left[row, c], neg_right[row, c] = s.entity, triplet[2]
    return _BatchCorruptions(
        rel=pos[:, 1].copy(),
        pos_left=pos[:, 0].copy(),
        pos_right=pos[:, 2].copy(),
        neg_left=neg_left,
        neg_right=neg_right,
    )


def _objective_terms(layout, x, corr, l2):
    """(J, gradient) of the batch objective at flat vector x; never raises."""
    params = unpack(layout, x)
    E = params.embeddings
    grad = np.zeros(layout.size, dtype=np.float64)
    emb_grad = grad[: layout.entity_size].reshape(layout.n_entities, layout.dim)
    C = corr.neg_left.shape[1]
    J = 0.0
    for r in np.unique(corr.rel):
        m = corr.rel == r
        pl, pr = corr.pos_left[m], corr.pos_right[m]
        nl, nr = corr.neg_left[m].ravel(), corr.neg_right[m].ravel()
        p_pos = params.plausibility_pairs(int(r), E[pl], E[pr])
        p_neg = params.plausibility_pairs(int(r), E[nl], E[nr]).reshape(-1, C)
        h = 1.0 - p_pos[:, None] + p_neg
        active = h > 0.0
        J += float(h[active].sum())
        w = np.concatenate([-active.sum(axis=1).astype(np.float64),
                            active.astype(np.float64).ravel()])
        ids_x = np.concatenate([pl, nl])
        ids_y = np.concatenate([pr, nr])
        rel_grads, shared_grads, dX, dY = pair_gradient_terms(
            params, int(r), E[ids_x], E[ids_y], w
        )
        for name, value in rel_grads.items():
            grad[layout.relation_field_slice(int(r), name)] += np.ravel(value)
        for name, value in shared_grads.items():
            grad[layout.shared_field_slice(name)] += np.ravel(value)
        np.add.at(emb_grad, ids_x, dX)
        np.add.at(emb_grad, ids_y, dY)
    if l2:
        J += l2 * float(x @ x)
        grad += (2.0 * l2) * x
    return J, grad


def batch_objective_and_gradient(layout, x, kb, indices, config, epoch=0):
    """Objective and exact gradient for the triplets at ``indices``.

    ``indices`` address rows of ``kb.train``; each triplet's corruptions come
    from its own (seed, epoch, index) stream, so the same call is bit
    reproducible.  Raises a numerical-failure error naming the first bad
    parameter group if the result is not finite.
    """
    indices = np.asarray(indices)
    if indices.size == 0:
        raise ConfigError("batch must be nonempty")
    stream_epoch = 0 if config.freeze_corruptions else epoch
    corr = _draw_batch(kb, indices, config, stream_epoch)
    J, grad = _objective_terms(layout, x, corr, config.l2)
    if not np.isfinite(J) or not np.all(np.isfinite(grad)):
        bad = np.flatnonzero(~np.isfinite(grad))
        where = layout.describe_index(int(bad[0])) if bad.size else "objective value"
        raise NumericalError(f"non-finite training objective at {where}")
    return J, grad


@dataclass
class EpochMetrics:
    epoch: int
    objective: float
    dev_accuracy: float


@dataclass
class TrainResult:
    """Best-dev parameters plus the full per-epoch metric trace."""

    layout: ParameterLayout
    x: np.ndarray
    metrics: list
    best_epoch: int
    best_dev_accuracy: float
    final_x: np.ndarray

    @property
    def params(self):
        return unpack(self.layout, self.x)


def write_metrics(path, metrics) -> None:
    """One `epoch<TAB>objective<TAB>dev_accuracy` line per epoch."""
    with open(path, "w", encoding="utf-8") as fh:
        for m in metrics:
            fh.write(f"{m.epoch}\t{m.objective:.10g}\t{m.dev_accuracy:.10g}\n")


def _dev_accuracy(params, dev_pos, dev_neg) -> float:
    from .evaluation import classify, fit_thresholds

    if len(dev_pos) == 0:
        return float("nan")
    table = fit_thresholds(params, dev_pos, dev_neg)
    return classify(params, table, dev_pos, dev_neg).accuracy


def train(kb: KnowledgeBase, config: TrainingConfig, init: np.ndarray) -> TrainResult:
    """Fit the configured model on ``kb.train``, selecting by dev accuracy.

    ``init`` is the (n_entities, dim) initial embedding matrix; relation
    parameters are drawn internally from the config seed.  Epochs are
    numbered from 0 in the metric trace.
    """
    from .evaluation import generate_negatives

    layout = config.layout(kb.n_entities, kb.n_relations)
    x = init_parameters(layout, init, seed=config.seed)
    N = len(kb.train)
    if N == 0:
        raise ConfigError("training split is empty")
    dev_pos = kb.dev
    dev_neg = (
        generate_negatives(kb, dev_pos, seed=[config.seed, _DEV_NEG_TAG])
        if len(dev_pos)
        else np.zeros((0, 3), dtype=np.int64)
    )

    metrics: list[EpochMetrics] = []
    best_x: Optional[np.ndarray] = None
    best_acc = -np.inf
    best_epoch = -1
    all_indices = np.arange(N)
    for epoch in range(config.epochs):
        stream_epoch = 0 if config.freeze_corruptions else epoch
        perm = np.random.default_rng(
            [config.seed, _SHUFFLE_TAG, epoch]
        ).permutation(N)
        for start in range(0, N, config.batch_size):
            chunk = perm[start : start + config.batch_size]
            corr = _draw_batch(kb, chunk, config, stream_epoch)
            if config.optimizer == "lbfgs":
                fun = lambda v: _objective_terms(layout, v, corr, config.l2)
                res = minimize(
                    fun,
                    x,
                    history=config.lbfgs_history,
                    max_iter=config.lbfgs_inner_iters,
                    max_step=config.lbfgs_max_step,
                )
                x = res.x
            else:
                _, g = _objective_terms(layout, x, corr, config.l2)
                x = x - config.sgd_step * g
        objective, _ = batch_objective_and_gradient(
            layout, x, kb, all_indices, config, epoch
        )
        dev_acc = _dev_accuracy(unpack(layout, x), dev_pos, dev_neg)
        metrics.append(EpochMetrics(epoch, objective, dev_acc))
        # ties go to the later epoch: at equal dev accuracy the more-trained
        # parameters rank better
        if np.isfinite(dev_acc) and dev_acc >= best_acc:
            best_acc, best_x, best_epoch = dev_acc, x.copy(), epoch
    if best_x is None:  # no dev fold: fall back to the final parameters
        best_x, best_epoch, best_acc = x.copy(), config.epochs - 1, float("nan")
    return TrainResult(
        layout=layout,
        x=best_x,
        metrics=metrics,
        best_epoch=best_epoch,
        best_dev_accuracy=float(best_acc),
        final_x=x,
    )
