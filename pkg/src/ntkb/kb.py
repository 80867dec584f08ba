"""Triplet dataset loading, vocabulary indexing, and membership queries.

A knowledge base is three splits (train/dev/test) of (left, relation, right)
assertions over shared entity and relation vocabularies.  Files are UTF-8,
one triple per line, tab-separated ``left<TAB>relation<TAB>right``; entity
names may contain spaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ParseError, VocabularyError

RawTriple = tuple[str, str, str]


class Triplet(NamedTuple):
    left: int
    relation: int
    right: int


def load_split(path, entity_vocab=None, relation_vocab=None) -> list[RawTriple]:
    """Read one split file and return its triples, in file order.

    Blank (whitespace-only) lines are skipped.  When ``entity_vocab`` /
    ``relation_vocab`` are given the vocabulary is frozen: any token not in
    them raises :class:`VocabularyError` naming the token.  Without them any
    well-formed file is accepted.
    """
    frozen = entity_vocab is not None
    triples: list[RawTriple] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}"
                )
            left, rel, right = parts
            if frozen:
                if left not in entity_vocab:
                    raise VocabularyError(f"{path}:{lineno}: unknown entity '{left}'")
                if right not in entity_vocab:
                    raise VocabularyError(f"{path}:{lineno}: unknown entity '{right}'")
                if relation_vocab is not None and rel not in relation_vocab:
                    raise VocabularyError(f"{path}:{lineno}: unknown relation '{rel}'")
            triples.append((left, rel, right))
    return triples


@dataclass
class KnowledgeBase:
    """Immutable after construction; safe for concurrent readers."""

    entity_names: list[str]
    relation_names: list[str]
    train: np.ndarray  # (n, 3) int64 columns [left, relation, right]
    dev: np.ndarray
    test: np.ndarray
    entity_index: dict[str, int] = field(repr=False)
    relation_index: dict[str, int] = field(repr=False)
    members: frozenset[tuple[int, int, int]] = field(repr=False)

    @property
    def n_entities(self) -> int:
        return len(self.entity_names)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    def contains(self, triplet) -> bool:
        left, rel, right = triplet
        return (int(left), int(rel), int(right)) in self.members

    def encode(self, raw: Iterable[RawTriple]) -> np.ndarray:
        """Resolve raw string triples to an (n, 3) id array (frozen vocabulary)."""
        rows = []
        for left, rel, right in raw:
            try:
                rows.append(
                    (self.entity_index[left], self.relation_index[rel], self.entity_index[right])
                )
            except KeyError as exc:
                raise VocabularyError(f"unknown token {exc.args[0]!r}") from None
        return np.array(rows, dtype=np.int64).reshape(-1, 3)

    def decode(self, triplets: np.ndarray) -> list[RawTriple]:
        return [
            (self.entity_names[l], self.relation_names[r], self.entity_names[t])
            for l, r, t in np.asarray(triplets).reshape(-1, 3)
        ]

    def split_overlap(self) -> dict[str, int]:
        """Count triplets shared between split pairs (reported, never removed)."""
        sets = {
            name: set(map(tuple, split.tolist()))
            for name, split in (("train", self.train), ("dev", self.dev), ("test", self.test))
        }
        return {
            "train_dev": len(sets["train"] & sets["dev"]),
            "train_test": len(sets["train"] & sets["test"]),
            "dev_test": len(sets["dev"] & sets["test"]),
        }


def contains(kb: KnowledgeBase, triplet) -> bool:
    """True iff the triplet occurs in any split of ``kb``."""
    return kb.contains(triplet)


def build_knowledge_base(
    train: Sequence[RawTriple],
    dev: Sequence[RawTriple] = (),
    test: Sequence[RawTriple] = (),
) -> KnowledgeBase:
    """Build vocabularies over the union of all splits and encode each split.

    Vocabulary order is first appearance scanning train, then dev, then test;
    within a triple the left entity registers before the right one.  Duplicate
    triplets are kept (they re-weight the training objective).
    """
    entity_index: dict[str, int] = {}
    relation_index: dict[str, int] = {}
    for split in (train, dev, test):
        for left, rel, right in split:
            if left not in entity_index:
                entity_index[left] = len(entity_index)
            if rel not in relation_index:
                relation_index[rel] = len(relation_index)
            if right not in entity_index:
                entity_index[right] = len(entity_index)

    def encode(split):
        rows = [
            (entity_index[l], relation_index[r], entity_index[t]) for l, r, t in split
        ]
        return np.array(rows, dtype=np.int64).reshape(-1, 3)

    train_ids, dev_ids, test_ids = encode(train), encode(dev), encode(test)
    members = frozenset(
        (int(l), int(r), int(t))
        for split in (train_ids, dev_ids, test_ids)
        for l, r, t in split
    )
    return KnowledgeBase(
        entity_names=list(entity_index),
        relation_names=list(relation_index),
        train=train_ids,
        dev=dev_ids,
        test=test_ids,
        entity_index=entity_index,
        relation_index=relation_index,
        members=members,
    )


def load_knowledge_base(train_path, dev_path, test_path) -> KnowledgeBase:
    """Load three split files and build one knowledge base over their union."""
    return build_knowledge_base(
        load_split(train_path), load_split(dev_path), load_split(test_path)
    )


def kb_with_vocabulary(
    entity_names: Sequence[str],
    relation_names: Sequence[str],
    train: Sequence[RawTriple] = (),
    dev: Sequence[RawTriple] = (),
    test: Sequence[RawTriple] = (),
) -> KnowledgeBase:
    """Build a knowledge base under a fixed, externally supplied vocabulary.

    Used when splits must be encoded in a previously trained model's id
    space.  Unknown tokens raise :class:`VocabularyError`.
    """
    entity_index = {name: i for i, name in enumerate(entity_names)}
    relation_index = {name: i for i, name in enumerate(relation_names)}

    def encode(split):
        rows = []
        for left, rel, right in split:
            for token, index in ((left, entity_index), (right, entity_index)):
                if token not in index:
                    raise VocabularyError(f"unknown entity '{token}'")
            if rel not in relation_index:
                raise VocabularyError(f"unknown relation '{rel}'")
            rows.append((entity_index[left], relation_index[rel], entity_index[right]))
        return np.array(rows, dtype=np.int64).reshape(-1, 3)

    train_ids, dev_ids, test_ids = encode(train), encode(dev), encode(test)
    members = frozenset(
        (int(l), int(r), int(t))
        for split in (train_ids, dev_ids, test_ids)
        for l, r, t in split
    )
    return KnowledgeBase(
        entity_names=list(entity_names),
        relation_names=list(relation_names),
        train=train_ids,
        dev=dev_ids,
        test=test_ids,
        entity_index=entity_index,
        relation_index=relation_index,
        members=members,
    )
