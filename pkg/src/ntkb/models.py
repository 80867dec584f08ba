"""Relation scorers: forward scoring and analytic gradients.

Four scorer families share one convention: ``plausibility`` is always
oriented so that higher means more likely true.  The tensor and bilinear
scorers are plausibility-oriented as written; the similarity and Hadamard
scorers score correct triplets lower, so their raw scores are negated before
the margin objective sees them.

The tensor scorer computes, for entity vectors e1, e2 and relation parameters
(W, V, U, b):

    g = U . f(h + V [e1; e2] + b),   h_i = e1' W[:, :, i] e2,   f = tanh

The bilinear scorer is its special case with V = 0, b = 0, k = 1, U = (1) and
the identity activation: g = e1' W e2.

The similarity scorer computes the distance |W_left e1 - W_right e2|_1 and
the Hadamard scorer the gated product score
-(W1 e1 * Wrel1 eR + b1) . (W2 e2 * Wrel2 eR + b2), where * is the
element-wise product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

MODEL_KINDS = ("ntn", "bilinear", "similarity", "hadamard")

# Relation parameters held per relation, in declaration (= serialization) order.
_NTN_FIELDS = ("W", "V", "U", "b")
_NTN_FIELDS_SHARED_U = ("W", "V", "b")
_BILINEAR_FIELDS = ("W",)
_SIMILARITY_FIELDS = ("W_left", "W_right")
_HADAMARD_FIELDS = ("e_rel",)
_HADAMARD_SHARED = ("W1", "W2", "W_rel1", "W_rel2", "b1", "b2")


def relation_field_shapes(kind, dim, slices, share_u=False):
    """Ordered (name, shape) pairs of the per-relation parameter record."""
    d, k = dim, slices
    if kind == "ntn":
        shapes = {"W": (d, d, k), "V": (k, 2 * d), "U": (k,), "b": (k,)}
        names = _NTN_FIELDS_SHARED_U if share_u else _NTN_FIELDS
        return [(n, shapes[n]) for n in names]
    if kind == "bilinear":
        return [("W", (d, d))]
    if kind == "similarity":
        return [("W_left", (d, d)), ("W_right", (d, d))]
    if kind == "hadamard":
        return [("e_rel", (d,))]
    raise ConfigError(f"unknown model kind '{kind}'")


def shared_field_shapes(kind, dim, slices, share_u=False):
    """Ordered (name, shape) pairs of parameters shared across relations."""
    d, k = dim, slices
    if kind == "ntn" and share_u:
        return [("U", (k,))]
    if kind == "hadamard":
        return [(n, (d, d) if n.startswith("W") else (d,)) for n in _HADAMARD_SHARED]
    return []


@dataclass
class ModelParams:
    """All trainable parameters of one model over one knowledge base.

    ``relation[r]`` maps field name to array for relation r; ``shared`` holds
    parameters common to all relations (the Hadamard projection matrices and
    gates, or U when it is shared).  Arrays may be views into one flat buffer.
    """

    kind: str
    dim: int
    slices: int
    embeddings: np.ndarray
    relation: list[dict[str, np.ndarray]]
    shared: dict[str, np.ndarray]
    share_u: bool = False

    @property
    def n_entities(self) -> int:
        return self.embeddings.shape[0]

    @property
    def n_relations(self) -> int:
        return len(self.relation)

    def _u(self, rel: int) -> np.ndarray:
        return self.shared["U"] if self.share_u else self.relation[rel]["U"]

    def plausibility(self, rel: int, e1: np.ndarray, e2: np.ndarray) -> float:
        """Oriented score of one (e1, rel, e2) pair given explicit vectors."""
        return float(
            self.plausibility_pairs(rel, e1.reshape(1, -1), e2.reshape(1, -1))[0]
        )

    def plausibility_triplets(self, triplets: np.ndarray) -> np.ndarray:
        """Oriented scores for an (n, 3) id array of [left, relation, right]."""
        triplets = np.asarray(triplets).reshape(-1, 3)
        out = np.empty(len(triplets), dtype=np.float64)
        for rel in np.unique(triplets[:, 1]):
            mask = triplets[:, 1] == rel
            out[mask] = self.plausibility_pairs(
                int(rel),
                self.embeddings[triplets[mask, 0]],
                self.embeddings[triplets[mask, 2]],
            )
        return out

    def plausibility_pairs(self, rel: int, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Oriented scores for row-aligned (n, d) left/right vector batches."""
        p = self.relation[rel]
        if self.kind == "ntn":
            return _ntn_pairs(X, Y, p["W"], p["V"], self._u(rel), p["b"])
        if self.kind == "bilinear":
            return _btp_pairs(X, Y, p["W"][:, :, None])[:, 0]
        if self.kind == "similarity":
            return -_similarity_raw_pairs(X, Y, p["W_left"], p["W_right"])
        if self.kind == "hadamard":
            return _hadamard_inner_pairs(X, Y, p["e_rel"], self.shared)
        raise ConfigError(f"unknown model kind '{self.kind}'")

    def plausibility_sweep(self, rel: int, e1: np.ndarray) -> np.ndarray:
        """Oriented score of (e1, rel, e) for every entity e, as one (n_entities,) array."""
        E = self.embeddings
        p = self.relation[rel]
        if self.kind == "ntn":
            W, V, b = p["W"], p["V"], p["b"]
            d = self.dim
            A = np.einsum("a,abk->bk", e1, W)  # (d, k)
            Z = E @ A + (V[:, :d] @ e1)[None, :] + E @ V[:, d:].T + b[None, :]
            return np.tanh(Z) @ self._u(rel)
        if self.kind == "bilinear":
            return E @ (e1 @ p["W"])
        if self.kind == "similarity":
            diff = (p["W_left"] @ e1)[None, :] - E @ p["W_right"].T
            return -np.abs(diff).sum(axis=1)
        if self.kind == "hadamard":
            s = self.shared
            g1 = s["W_rel1"] @ p["e_rel"]
            g2 = s["W_rel2"] @ p["e_rel"]
            a = (s["W1"] @ e1) * g1 + s["b1"]
            B = (E @ s["W2"].T) * g2[None, :] + s["b2"][None, :]
            return B @ a
        raise ConfigError(f"unknown model kind '{self.kind}'")


# ---------------------------------------------------------------------------
# Scoring kernels.  The bilinear scorer reuses the tensor-product kernels with
# k = 1 so that the special-case reduction is exact to the last bit.


def _btp_pairs(X, Y, W):
    # h[n, i] = X[n] . W[:, :, i] Y[n]
    return np.einsum("na,abk,nb->nk", X, W, Y)


def _ntn_pairs(X, Y, W, V, U, b, activation="tanh"):
    d = X.shape[1]
    Z = _btp_pairs(X, Y, W) + X @ V[:, :d].T + Y @ V[:, d:].T + b[None, :]
    T = np.tanh(Z) if activation == "tanh" else Z
    return T @ U

def _similarity_raw_pairs(X, Y, W_left, W_right):
    return np.abs(X @ W_left.T - Y @ W_right.T).sum(axis=1)


def _hadamard_gates(e_rel, shared):
    return shared["W_rel1"] @ e_rel, shared["W_rel2"] @ e_rel


def _hadamard_inner_pairs(X, Y, e_rel, shared):
    g1, g2 = _hadamard_gates(e_rel, shared)
    A = (X @ shared["W1"].T) * g1[None, :] + shared["b1"][None, :]
    B = (Y @ shared["W2"].T) * g2[None, :] + shared["b2"][None, :]
    return (A * B).sum(axis=1)


# ---------------------------------------------------------------------------
# Public scorers operating on explicit parameter arrays.


def bilinear_tensor_product(e1, e2, W):
    """h with h_i = e1' W[:, :, i] e2 for a (d, d, k) slice tensor."""
    e1, e2, W = np.asarray(e1), np.asarray(e2), np.asarray(W)
    if W.shape[:2] != (e1.shape[0], e2.shape[0]):
        raise ConfigError(f"tensor shape {W.shape} does not match vectors")
    return _btp_pairs(e1[None, :], e2[None, :], W)[0]


def ntn_score(e1, e2, W, V, U, b, activation="tanh"):
    """Tensor-network score U . f(e1' W e2 + V [e1; e2] + b), f = tanh.

    ``activation`` exists only to realize the bilinear special case
    (identity); it is not a tunable model choice.
    """
    e1, e2 = np.asarray(e1), np.asarray(e2)
    k = np.asarray(W).shape[2]
    if np.asarray(V).shape != (k, e1.shape[0] + e2.shape[0]):
        raise ConfigError(f"V shape {np.asarray(V).shape} inconsistent with W and entities")
    return float(_ntn_pairs(e1[None, :], e2[None, :], W, V, U, b, activation)[0])


def bilinear_score(e1, e2, W):
    """Plain bilinear form e1' W e2."""
    e1, e2, W = np.asarray(e1), np.asarray(e2), np.asarray(W)
    if W.shape != (e1.shape[0], e2.shape[0]):
        raise ConfigError(f"matrix shape {W.shape} does not match vectors")
    return float(_btp_pairs(e1[None, :], e2[None, :], W[:, :, None])[0, 0])


def similarity_score(e1, e2, W_left, W_right):
    """L1 distance |W_left e1 - W_right e2|; lower means more plausible."""
    e1, e2 = np.asarray(e1), np.asarray(e2)
    if np.asarray(W_left).shape != (np.asarray(W_left).shape[0], e1.shape[0]):
        raise ConfigError("W_left shape does not match e1")
    return float(_similarity_raw_pairs(e1[None, :], e2[None, :], W_left, W_right)[0])


def hadamard_score(e1, e2, e_rel, W1, W2, W_rel1, W_rel2, b1, b2):
    """Gated-product score, negated inner product of the two gated vectors.

    Lower means more plausible; the negation of this value is the oriented
    plausibility.
    """
    shared = {"W1": W1, "W2": W2, "W_rel1": W_rel1, "W_rel2": W_rel2, "b1": b1, "b2": b2}
    e1, e2 = np.asarray(e1), np.asarray(e2)
    return -float(_hadamard_inner_pairs(e1[None, :], e2[None, :], np.asarray(e_rel), shared)[0])


# ---------------------------------------------------------------------------
# Gradients.  One kernel per model computes the weighted sum of plausibility
# gradients over a batch of scored pairs; the margin-loss gradient is a
# weighted combination of those (negative weight on the correct pair).


@dataclass
class GradientSet:
    """Gradients shaped like ModelParams, with entity gradients sparse."""

    relation: list[dict[str, np.ndarray]]
    shared: dict[str, np.ndarray]
    entities: dict[int, np.ndarray] = field(default_factory=dict)

    def entity(self, idx: int) -> np.ndarray:
        return self.entities[idx]

    def is_zero(self, atol: float = 0.0) -> bool:
        arrays = [a for rec in self.relation for a in rec.values()]
        arrays += list(self.shared.values()) + list(self.entities.values())
        return all(np.all(np.abs(a) <= atol) for a in arrays)


def zero_gradients(params: ModelParams) -> GradientSet:
    return GradientSet(
        relation=[{k: np.zeros_like(v) for k, v in rec.items()} for rec in params.relation],
        shared={k: np.zeros_like(v) for k, v in params.shared.items()},
        entities={},
    )


def _ntn_grad_terms(X, Y, W, V, U, b, weights, activation="tanh"):
    d = X.shape[1]
    Z = _btp_pairs(X, Y, W) + X @ V[:, :d].T + Y @ V[:, d:].T + b[None, :]
    if activation == "tanh":
        T = np.tanh(Z)
        wdelta = weights[:, None] * ((1.0 - T * T) * U[None, :])
    else:
        T = Z
        wdelta = weights[:, None] * np.broadcast_to(U[None, :], Z.shape)
    dW = np.einsum("nk,na,nb->abk", wdelta, X, Y)
    dV = np.concatenate([wdelta.T @ X, wdelta.T @ Y], axis=1)
    dU = T.T @ weights
    db = wdelta.sum(axis=0)
    dX = np.einsum("nk,abk,nb->na", wdelta, W, Y) + wdelta @ V[:, :d]
    dY = np.einsum("nk,abk,na->nb", wdelta, W, X) + wdelta @ V[:, d:]
    return {"W": dW, "V": dV, "U": dU, "b": db}, dX, dY


def _bilinear_grad_terms(X, Y, W, weights):
    wdelta = weights[:, None]  # k = 1, identity activation
    W3 = W[:, :, None]
    dW = np.einsum("nk,na,nb->abk", wdelta, X, Y)[:, :, 0]
    dX = np.einsum("nk,abk,nb->na", wdelta, W3, Y)
    dY = np.einsum("nk,abk,na->nb", wdelta, W3, X)
    return {"W": dW}, dX, dY


def _similarity_grad_terms(X, Y, W_left, W_right, weights):
    # plausibility = -|W_left x - W_right y|_1; sign(0) = 0 at the kink
    S = np.sign(X @ W_left.T - Y @ W_right.T)
    wS = weights[:, None] * S
    dWl = -(wS.T @ X)
    dWr = wS.T @ Y
    dX = -(wS @ W_left)
    dY = wS @ W_right
    return {"W_left": dWl, "W_right": dWr}, dX, dY


def _hadamard_grad_terms(X, Y, e_rel, shared, weights):
    g1, g2 = _hadamard_gates(e_rel, shared)
    XW = X @ shared["W1"].T
    YW = Y @ shared["W2"].T
    A = XW * g1[None, :] + shared["b1"][None, :]
    B = YW * g2[None, :] + shared["b2"][None, :]
    dA = weights[:, None] * B
    dB = weights[:, None] * A
    dG1 = (dA * XW).sum(axis=0)
    dG2 = (dB * YW).sum(axis=0)
    rel_grads = {"e_rel": shared["W_rel1"].T @ dG1 + shared["W_rel2"].T @ dG2}
    shared_grads = {
        "W1": (dA * g1[None, :]).T @ X,
        "W2": (dB * g2[None, :]).T @ Y,
        "W_rel1": np.outer(dG1, e_rel),
        "W_rel2": np.outer(dG2, e_rel),
        "b1": dA.sum(axis=0),
        "b2": dB.sum(axis=0),
    }
    dX = (dA * g1[None, :]) @ shared["W1"]
    dY = (dB * g2[None, :]) @ shared["W2"]
    return rel_grads, shared_grads, dX, dY


def pair_gradient_terms(params, rel, X, Y, weights, activation="tanh"):
    """Weighted plausibility gradients summed over row-aligned scored pairs.

    Returns (relation_grads, shared_grads, dX, dY) where the first two are
    field dicts already summed over pairs and dX/dY are per-pair entity
    gradients awaiting scatter-accumulation by the caller.
    """
    p = params.relation[rel]
    if params.kind == "ntn":
        rg, dX, dY = _ntn_grad_terms(
            X, Y, p["W"], p["V"], params._u(rel), p["b"], weights, activation
        )
        if params.share_u:
            return {k: v for k, v in rg.items() if k != "U"}, {"U": rg["U"]}, dX, dY
        return rg, {}, dX, dY
    if params.kind == "bilinear":
        rg, dX, dY = _bilinear_grad_terms(X, Y, p["W"], weights)
        return rg, {}, dX, dY
    if params.kind == "similarity":
        rg, dX, dY = _similarity_grad_terms(X, Y, p["W_left"], p["W_right"], weights)
        return rg, {}, dX, dY
    if params.kind == "hadamard":
        rg, sg, dX, dY = _hadamard_grad_terms(X, Y, p["e_rel"], params.shared, weights)
        return rg, sg, dX, dY
    raise ConfigError(f"unknown model kind '{params.kind}'")


def gradient(params, triplet, corrupt_entity, corrupt_side="right", activation="tanh"):
    """Exact gradient of max(0, 1 - p(correct) + p(corrupt)) for one pair.

    Covers every parameter of the triplet's relation plus the (up to three)
    entity vectors involved.  An inactive margin returns all zeros; the
    margin kink itself takes the zero subgradient.
    """
    left, rel, right = (int(v) for v in triplet)
    corrupt_entity = int(corrupt_entity)
    if corrupt_side == "right":
        neg_pair = (left, corrupt_entity)
    elif corrupt_side == "left":
        neg_pair = (corrupt_entity, right)
    else:
        raise ConfigError(f"unknown corruption side '{corrupt_side}'")

    E = params.embeddings
    x_ids = np.array([left, neg_pair[0]])
    y_ids = np.array([right, neg_pair[1]])
    X, Y = E[x_ids], E[y_ids]
    if params.kind == "ntn":
        p = params.relation[rel]
        scores = _ntn_pairs(X, Y, p["W"], p["V"], params._u(rel), p["b"], activation)
    else:
        scores = params.plausibility_pairs(rel, X, Y)
    out = zero_gradients(params)
    if 1.0 - scores[0] + scores[1] <= 0.0:
        return out

    weights = np.array([-1.0, 1.0])
    rel_grads, shared_grads, dX, dY = pair_gradient_terms(
        params, rel, X, Y, weights, activation
    )
    for name, value in rel_grads.items():
        out.relation[rel][name] += value
    for name, value in shared_grads.items():
        out.shared[name] += value
    for idx, row in zip(x_ids, dX):
        out.entities[int(idx)] = out.entities.get(int(idx), np.zeros(params.dim)) + row
    for idx, row in zip(y_ids, dY):
        out.entities[int(idx)] = out.entities.get(int(idx), np.zeros(params.dim)) + row
    return out
