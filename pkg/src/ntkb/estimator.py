"""Estimator-style front end: fit on triples, predict truth values.

`KnowledgeBaseCompleter` wraps vocabulary construction, embedding
initialization, margin training, and threshold fitting behind the familiar
fit/predict surface.  X is an (n, 3) array-like of (left entity, relation,
right entity) name triples; there is no separate y at fit time because
every training triple is a positive assertion (negatives are manufactured
internally by corruption).

After fitting:

    decision_function(X) -> oriented plausibility per triple
    predict(X)           -> boolean verdicts via per-relation thresholds
    rank(X)              -> rank of each triple's right entity
    score(X, y)          -> mean agreement with boolean labels y
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .embeddings import init_entity_embeddings, load_word_vectors
from .errors import ConfigError
from .evaluation import fit_thresholds, generate_negatives, rank_triplets
from .flatten import unpack
from .kb import build_knowledge_base
from .training import _DEV_NEG_TAG, TrainingConfig, train


def check_name_triples(X) -> np.ndarray:
    """Coerce to an (n, 3) array of strings or raise a configuration error."""
    arr = np.asarray(X)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ConfigError(
            f"expected an (n, 3) array of (left, relation, right) names, got shape {arr.shape}"
        )
    return arr.astype(str)


class KnowledgeBaseCompleter(BaseEstimator):
    """Relational scorer trained with the contrastive max-margin objective.

    Parameters mirror the training configuration; ``init`` selects random
    or word-average embedding initialization (the latter requires
    ``word_vectors``, a path to a text embedding file).
    """

    def __init__(
        self,
        model="ntn",
        dim=100,
        slices=4,
        corruptions=10,
        l2=1e-4,
        batch_size=1000,
        epochs=100,
        lbfgs_history=5,
        lbfgs_inner_iters=10,
        lbfgs_max_step=0.5,
        corrupt_side="right",
        optimizer="lbfgs",
        sgd_step=0.01,
        init="random",
        word_vectors=None,
        share_u=False,
        freeze_corruptions=False,
        seed=0,
    ):
        self.model = model
        self.dim = dim
        self.slices = slices
        self.corruptions = corruptions
        self.l2 = l2
        self.batch_size = batch_size
        self.epochs = epochs
        self.lbfgs_history = lbfgs_history
        self.lbfgs_inner_iters = lbfgs_inner_iters
        self.lbfgs_max_step = lbfgs_max_step
        self.corrupt_side = corrupt_side
        self.optimizer = optimizer
        self.sgd_step = sgd_step
        self.init = init
        self.word_vectors = word_vectors
        self.share_u = share_u
        self.freeze_corruptions = freeze_corruptions
        self.seed = seed

    def _config(self) -> TrainingConfig:
        return TrainingConfig(
            model=self.model,
            dim=self.dim,
            slices=self.slices,
            corruptions=self.corruptions,
            l2=self.l2,
            batch_size=self.batch_size,
            epochs=self.epochs,
            lbfgs_history=self.lbfgs_history,
            lbfgs_inner_iters=self.lbfgs_inner_iters,
            lbfgs_max_step=self.lbfgs_max_step,
            corrupt_side=self.corrupt_side,
            seed=self.seed,
            optimizer=self.optimizer,
            sgd_step=self.sgd_step,
            share_u=self.share_u,
            freeze_corruptions=self.freeze_corruptions,
        )

    def fit(self, X, y=None, dev=None):
        """Train on positive triples X; ``dev`` (default: X) drives model
        selection and threshold fitting."""
        triples = [tuple(row) for row in check_name_triples(X)]
        dev_triples = (
            [tuple(row) for row in check_name_triples(dev)] if dev is not None else triples
        )
        if self.init not in ("random", "word-average"):
            raise ConfigError(f"unknown init mode '{self.init}'")
        if self.init == "word-average" and self.word_vectors is None:
            raise ConfigError("word-average init requires word_vectors")
        kb = build_knowledge_base(triples, dev_triples)
        table = load_word_vectors(self.word_vectors) if self.init == "word-average" else None
        embeddings = init_entity_embeddings(
            kb,
            mode="word-average" if table is not None else "random",
            table=table,
            seed=self.seed,
            dim=self.dim,
        )
        result = train(kb, self._config(), embeddings)
        self.kb_ = kb
        self.layout_ = result.layout
        self.x_ = result.x
        self.params_ = unpack(result.layout, result.x)
        self.metrics_ = result.metrics
        self.best_epoch_ = result.best_epoch
        self.best_dev_accuracy_ = result.best_dev_accuracy
        dev_neg = generate_negatives(kb, kb.dev, seed=[self.seed, _DEV_NEG_TAG])
        self.thresholds_ = fit_thresholds(self.params_, kb.dev, dev_neg)
        self.n_features_in_ = 3
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise ConfigError("this estimator is not fitted yet; call fit first")

    def _encode(self, X) -> np.ndarray:
        self._check_fitted()
        rows = check_name_triples(X)
        return self.kb_.encode([tuple(row) for row in rows])

    def decision_function(self, X) -> np.ndarray:
        """Oriented plausibility of each (left, relation, right) triple."""
        return self.params_.plausibility_triplets(self._encode(X))

    def predict(self, X) -> np.ndarray:
        """True/false verdict per triple from the per-relation thresholds."""
        encoded = self._encode(X)
        scores = self.params_.plausibility_triplets(encoded)
        return scores >= self.thresholds_.thresholds[encoded[:, 1]]

    def rank(self, X) -> np.ndarray:
        """Rank of each triple's right entity among all entities (1 = best)."""
        return rank_triplets(self.params_, self._encode(X))

    def score(self, X, y) -> float:
        """Mean agreement between predict(X) and boolean labels y."""
        y = np.asarray(y, dtype=bool).reshape(-1)
        predictions = self.predict(X)
        if len(y) != len(predictions):
            raise ConfigError("X and y lengths differ")
        return float(np.mean(predictions == y))
