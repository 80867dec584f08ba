"""Deterministic synthetic knowledge base for tests and demos.

Fifty entities: ten groups (`group_0` .. `group_9`) and forty items
(`item_00` .. `item_39`), four items per group.  Three relations, forty
facts each:

    type_of      item -> its group (a 4-to-1 hierarchy)
    paired_with  partner item within the group, both directions (symmetric)
    routes_to    item -> another item under a fixed derangement with
                 cycle lengths 3, 5, 7, 12, and 13

The derangement avoids `paired_with` partners, so the three relations
never share an edge, and its membership cuts across the group structure
at random.  The cycle lengths are the point: realizing a permutation
with a single linear map means giving each distinct cycle length its own
rotation plane (a plane rotated by 2*pi/c carries only c-cycles), and
these five lengths cannot share planes (four are primes and 12 is no
least common multiple of the rest), so they demand five planes where an
8-dimensional space holds four.  A scorer that compares two linear
projections of the entity vectors therefore cannot separate this
relation cleanly at d = 8, while multiplicative scorers absorb it.

The 120 distinct facts are functional: a (left, relation) pair determines
the right entity uniquely, so a model that memorizes the KB can rank every
true right entity first.  The training file repeats facts (sampled with
replacement) so corruption sampling sees each fact several times per
epoch; dev and test are samples from the same closed fact set.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .kb import build_knowledge_base

N_GROUPS = 10
ITEMS_PER_GROUP = 4
DEFAULT_SEED = 13
TRAIN_SIZE = 400
DEV_SIZE = 50
TEST_SIZE = 50
_ROUTE_SEED = 7  # the derangement is part of the fixture's identity
ROUTE_CYCLE_LENGTHS = (3, 5, 7, 12, 13)  # five lengths, four rotation planes


def _partner(i: int) -> int:
    base = (i // ITEMS_PER_GROUP) * ITEMS_PER_GROUP
    return base + {0: 1, 1: 0, 2: 3, 3: 2}[i % ITEMS_PER_GROUP]


def _routing() -> list[int]:
    n = N_GROUPS * ITEMS_PER_GROUP
    assert sum(ROUTE_CYCLE_LENGTHS) == n
    rng = np.random.default_rng([_ROUTE_SEED])
    while True:
        order = rng.permutation(n)
        perm = [0] * n
        start = 0
        for length in ROUTE_CYCLE_LENGTHS:
            cycle = order[start : start + length]
            for a, b in zip(cycle, np.roll(cycle, -1)):
                perm[int(a)] = int(b)
            start += length
        if all(perm[i] != _partner(i) for i in range(n)):
            return perm


def fixture_facts():
    """The 120 distinct true facts as (left, relation, right) name triples."""
    groups = [f"group_{g}" for g in range(N_GROUPS)]
    items = [f"item_{i:02d}" for i in range(N_GROUPS * ITEMS_PER_GROUP)]
    facts = []
    for i, item in enumerate(items):
        facts.append((item, "type_of", groups[i // ITEMS_PER_GROUP]))
    for i in range(len(items)):
        facts.append((items[i], "paired_with", items[_partner(i)]))
    for i, j in enumerate(_routing()):
        facts.append((items[i], "routes_to", items[j]))
    return facts


def fixture_triples(seed=DEFAULT_SEED):
    """(train, dev, test) name-triple lists; train covers every fact.

    Training repetitions are balanced (fact counts differ by at most one)
    so corruption sampling gives each fact comparable negative coverage.
    """
    facts = fixture_facts()
    n = len(facts)
    rng = np.random.default_rng([seed, 0])
    base, remainder = divmod(TRAIN_SIZE, n)
    bonus = set(rng.permutation(n)[:remainder].tolist())
    train = []
    for i, fact in enumerate(facts):
        train.extend([fact] * (base + (1 if i in bonus else 0)))
    order = rng.permutation(len(train))
    train = [train[i] for i in order]
    dev_rng = np.random.default_rng([seed, 1])
    dev = [facts[i] for i in dev_rng.integers(0, n, size=DEV_SIZE)]
    test_rng = np.random.default_rng([seed, 2])
    test = [facts[i] for i in test_rng.integers(0, n, size=TEST_SIZE)]
    return train, dev, test


def build_fixture_kb(seed=DEFAULT_SEED):
    train, dev, test = fixture_triples(seed)
    return build_knowledge_base(train, dev, test)


def write_fixture(directory, seed=DEFAULT_SEED):
    """Write train.txt / dev.txt / test.txt under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    train, dev, test = fixture_triples(seed)
    for name, triples in (("train.txt", train), ("dev.txt", dev), ("test.txt", test)):
        with open(directory / name, "w", encoding="utf-8") as fh:
            for left, rel, right in triples:
                fh.write(f"{left}\t{rel}\t{right}\n")
    return directory
