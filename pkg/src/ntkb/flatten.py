"""Flat parameter vector layout, packing, and initialization.

The optimizer works on one contiguous float64 vector.  Its layout, fixed per
(kind, dim, slices, n_entities, n_relations, share_u) tuple, is:

    1. entity embeddings, by entity id, each d components;
    2. one record per relation, in relation-id order, fields in declaration
       order (tensor model: W, V, U, b; bilinear: W; similarity: W_left,
       W_right; Hadamard: e_rel);
    3. shared parameters, if any (Hadamard: W1, W2, W_rel1, W_rel2, b1, b2;
       tensor model with shared U: U).

The same order is the checkpoint payload order, so a checkpoint round-trip
and a pack round-trip agree by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .models import (
    GradientSet,
    ModelParams,
    relation_field_shapes,
    shared_field_shapes,
)

_PARAM_INIT_TAG = 0xFFFFFFFE


@dataclass(frozen=True)
class ParameterLayout:
    """Address map from (group, name) to a slice of the flat vector."""

    kind: str
    dim: int
    slices: int
    n_entities: int
    n_relations: int
    share_u: bool = False

    def __post_init__(self):
        if self.kind not in ("ntn", "bilinear", "similarity", "hadamard"):
            raise ConfigError(f"unknown model kind '{self.kind}'")
        if self.dim < 1 or self.slices < 1:
            raise ConfigError("dim and slices must be positive")
        if self.share_u and self.kind != "ntn":
            raise ConfigError("shared U applies only to the tensor model")

    @property
    def relation_fields(self):
        return relation_field_shapes(self.kind, self.dim, self.slices, self.share_u)

    @property
    def shared_fields(self):
        return shared_field_shapes(self.kind, self.dim, self.slices, self.share_u)

    @property
    def entity_size(self) -> int:
        return self.n_entities * self.dim

    @property
    def relation_record_size(self) -> int:
        return sum(int(np.prod(shape)) for _, shape in self.relation_fields)

    @property
    def shared_size(self) -> int:
        return sum(int(np.prod(shape)) for _, shape in self.shared_fields)

    @property
    def size(self) -> int:
        return (
            self.entity_size
            + self.n_relations * self.relation_record_size
            + self.shared_size
        )

    def entity_slice(self, idx: int) -> slice:
        d = self.dim
        return slice(idx * d, (idx + 1) * d)

    def relation_field_slice(self, rel: int, name: str) -> slice:
        base = self.entity_size + rel * self.relation_record_size
        for fname, shape in self.relation_fields:
            n = int(np.prod(shape))
            if fname == name:
                return slice(base, base + n)
            base += n
        raise KeyError(name)

    def shared_field_slice(self, name: str) -> slice:
        base = self.entity_size + self.n_relations * self.relation_record_size
        for fname, shape in self.shared_fields:
            n = int(np.prod(shape))
            if fname == name:
                return slice(base, base + n)
            base += n
        raise KeyError(name)

    def describe_index(self, index: int) -> str:
        """Human-readable name of the parameter group owning flat index."""
        if not 0 <= index < self.size:
            raise IndexError(index)
        if index < self.entity_size:
            return f"embedding of entity {index // self.dim}"
        offset = index - self.entity_size
        rel_total = self.n_relations * self.relation_record_size
        if offset < rel_total:
            rel, within = divmod(offset, self.relation_record_size)
            for name, shape in self.relation_fields:
                n = int(np.prod(shape))
                if within < n:
                    return f"relation {rel} parameter {name}"
                within -= n
        offset -= rel_total
        for name, shape in self.shared_fields:
            n = int(np.prod(shape))
            if offset < n:
                return f"shared parameter {name}"
            offset -= n
        raise IndexError(index)


def unpack(layout: ParameterLayout, flat: np.ndarray) -> ModelParams:
    """View the flat vector as structured parameters (no copying)."""
    flat = np.asarray(flat)
    if flat.shape != (layout.size,):
        raise ConfigError(
            f"flat vector has {flat.shape[0] if flat.ndim == 1 else 'wrong'} "
            f"components, layout requires {layout.size}"
        )
    d = layout.dim
    embeddings = flat[: layout.entity_size].reshape(layout.n_entities, d)
    relation = []
    for r in range(layout.n_relations):
        rec = {}
        for name, shape in layout.relation_fields:
            rec[name] = flat[layout.relation_field_slice(r, name)].reshape(shape)
        relation.append(rec)
    shared = {
        name: flat[layout.shared_field_slice(name)].reshape(shape)
        for name, shape in layout.shared_fields
    }
    return ModelParams(
        kind=layout.kind,
        dim=d,
        slices=layout.slices,
        embeddings=embeddings,
        relation=relation,
        shared=shared,
        share_u=layout.share_u,
    )


def pack(layout: ParameterLayout, params: ModelParams) -> np.ndarray:
    """Copy structured parameters into a fresh flat vector."""
    flat = np.empty(layout.size, dtype=np.float64)
    flat[: layout.entity_size] = np.asarray(params.embeddings, dtype=np.float64).ravel()
    for r in range(layout.n_relations):
        for name, shape in layout.relation_fields:
            arr = np.asarray(params.relation[r][name], dtype=np.float64)
            if arr.shape != shape:
                raise ConfigError(
                    f"relation {r} field {name} has shape {arr.shape}, expected {shape}"
                )
            flat[layout.relation_field_slice(r, name)] = arr.ravel()
    for name, shape in layout.shared_fields:
        arr = np.asarray(params.shared[name], dtype=np.float64)
        if arr.shape != shape:
            raise ConfigError(f"shared field {name} has shape {arr.shape}, expected {shape}")
        flat[layout.shared_field_slice(name)] = arr.ravel()
    return flat


def pack_gradients(layout: ParameterLayout, grads: GradientSet) -> np.ndarray:
    """Flatten a GradientSet into the layout's vector order (zeros elsewhere)."""
    flat = np.zeros(layout.size, dtype=np.float64)
    for idx, row in grads.entities.items():
        flat[layout.entity_slice(idx)] = row
    for r, rec in enumerate(grads.relation):
        for name, arr in rec.items():
            flat[layout.relation_field_slice(r, name)] = np.ravel(arr)
    for name, arr in grads.shared.items():
        flat[layout.shared_field_slice(name)] = np.ravel(arr)
    return flat


def init_parameters(
    layout: ParameterLayout, embeddings: np.ndarray, seed: int = 0
) -> np.ndarray:
    """Fresh flat vector: given embeddings, uniform relation/shared weights.

    Relation and shared weights are drawn iid uniform on
    [-1/sqrt(2 d), 1/sqrt(2 d)] from a stream keyed off the seed but separate
    from every per-entity stream.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.shape != (layout.n_entities, layout.dim):
        raise ConfigError(
            f"embeddings shape {embeddings.shape} does not match layout "
            f"({layout.n_entities}, {layout.dim})"
        )
    flat = np.empty(layout.size, dtype=np.float64)
    flat[: layout.entity_size] = embeddings.ravel()
    rng = np.random.default_rng([seed, _PARAM_INIT_TAG])
    r = 1.0 / np.sqrt(2.0 * layout.dim)
    rest = layout.size - layout.entity_size
    flat[layout.entity_size :] = rng.uniform(-r, r, size=rest)
    return flat
