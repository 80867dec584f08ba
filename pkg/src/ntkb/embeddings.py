"""Word-vector file parsing and entity-embedding initialization.

Entity vectors are trainable parameters.  They start either as seeded uniform
noise or as the average of pretrained word vectors over the tokens of the
entity's name (WordNet-style names such as ``__ice_cream_1`` tokenize to
``[ice, cream]``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ParseError
from .kb import KnowledgeBase

# Fallback noise scales: tiny for out-of-vocabulary tokens so pretrained
# vectors dominate, larger for fully random initialization.
OOV_SCALE = 1e-3
RANDOM_SCALE = 0.1

_SENSE_SUFFIX = re.compile(r"_\d+$")
_TOKEN_SPLIT = re.compile(r"[_ ]+")


@dataclass
class WordVectorTable:
    dimension: int
    vectors: dict[str, np.ndarray]

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[token]

    def __len__(self) -> int:
        return len(self.vectors)


def load_word_vectors(path) -> WordVectorTable:
    """Parse a text word-vector file: ``token v1 v2 ... vd`` per line.

    An optional first line of exactly two integers (``count dim``) is treated
    as a header and skipped.  The dimension is inferred from the first data
    line; every later line must match it.
    """
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and _is_int(parts[0]) and _is_int(parts[1]):
                continue  # header line
            token, components = parts[0], parts[1:]
            if dim is None:
                dim = len(components)
                if dim == 0:
                    raise ParseError(f"{path}:{lineno}: no vector components")
            elif len(components) != dim:
                raise ParseError(
                    f"{path}:{lineno}: expected {dim} components, got {len(components)}"
                )
            try:
                vec = np.array([float(c) for c in components], dtype=np.float64)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric vector component") from None
            vectors[token] = vec
    if dim is None:
        raise ParseError(f"{path}: file contains no word vectors")
    return WordVectorTable(dimension=dim, vectors=vectors)


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True


def tokenize_entity_name(name: str) -> list[str]:
    """Split an entity name into lowercase word tokens.

    Strips leading/trailing underscores and one trailing ``_<digits>`` sense
    suffix, then splits on underscores and spaces.  May return an empty list.
    """
    name = name.strip("_")
    name = _SENSE_SUFFIX.sub("", name, count=1)
    return [tok.lower() for tok in _TOKEN_SPLIT.split(name) if tok]


def _entity_rng(seed: int, entity_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, entity_index])


def init_entity_embeddings(
    kb: KnowledgeBase,
    mode: str = "random",
    table: WordVectorTable | None = None,
    seed: int = 0,
    dim: int | None = None,
) -> np.ndarray:
    """Build the initial (n_entities, dim) embedding matrix.

    mode="word-average": each entity vector is the mean of its tokens' word
    vectors; a token missing from the table contributes a uniform draw on
    [-OOV_SCALE, OOV_SCALE] from a generator seeded by (seed, entity index),
    as does the whole vector of an entity with no tokens at all.

    mode="random": every entity vector is drawn uniformly on
    [-RANDOM_SCALE, RANDOM_SCALE] from the same per-entity generators.

    Identical inputs give bit-identical output.
    """
    if mode not in ("random", "word-average"):
        raise ConfigError(f"unknown initialization mode '{mode}'")
    if mode == "word-average":
        if table is None:
            raise ConfigError("word-average initialization requires a word-vector table")
        if dim is None:
            dim = table.dimension
        elif dim != table.dimension:
            raise ConfigError(
                f"embedding dimension {dim} does not match word-vector dimension {table.dimension}"
            )
    elif dim is None:
        raise ConfigError("random initialization requires an explicit dimension")

    out = np.empty((kb.n_entities, dim), dtype=np.float64)
    for idx, name in enumerate(kb.entity_names):
        rng = _entity_rng(seed, idx)
        if mode == "random":
            out[idx] = rng.uniform(-RANDOM_SCALE, RANDOM_SCALE, dim)
            continue
        tokens = tokenize_entity_name(name)
        if not tokens:
            out[idx] = rng.uniform(-OOV_SCALE, OOV_SCALE, dim)
            continue
        acc = np.zeros(dim, dtype=np.float64)
        for token in tokens:
            if token in table:
                acc += table[token]
            else:
                acc += rng.uniform(-OOV_SCALE, OOV_SCALE, dim)
        out[idx] = acc / len(tokens)
    return out


def compose_entity_vector(
    name: str, table: WordVectorTable, seed: int = 0, slot: int = 0
) -> np.ndarray:
    """Word-average vector for an entity that is not in any knowledge base.

    Used for out-of-KB queries; ``slot`` stands in for the entity index when
    seeding the fallback-noise generator, keeping queries deterministic.
    """
    rng = _entity_rng(seed, slot)
    tokens = tokenize_entity_name(name)
    if not tokens:
        return rng.uniform(-OOV_SCALE, OOV_SCALE, table.dimension)
    acc = np.zeros(table.dimension, dtype=np.float64)
    for token in tokens:
        if token in table:
            acc += table[token]
        else:
            acc += rng.uniform(-OOV_SCALE, OOV_SCALE, table.dimension)
    return acc / len(tokens)
