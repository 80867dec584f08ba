from collections import Counter
from pathlib import Path

import numpy as np

from ntkb import build_fixture_kb, fixture_facts, fixture_triples, write_fixture
from ntkb.fixture import DEV_SIZE, TEST_SIZE, TRAIN_SIZE

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "fixture"


def test_fact_set_shape():
    facts = fixture_facts()
    assert len(facts) == 120
    by_rel = Counter(rel for _, rel, _ in facts)
    assert by_rel == {"type_of": 40, "paired_with": 40, "routes_to": 40}
    assert len(set(facts)) == 120


def test_facts_are_functional():
    # one right entity per (left, relation): rank-1 retrieval is attainable
    seen = {}
    for left, rel, right in fixture_facts():
        key = (left, rel)
        assert key not in seen or seen[key] == right
        seen[key] = right


def test_paired_with_is_symmetric():
    pairs = {(l, r) for l, rel, r in fixture_facts() if rel == "paired_with"}
    assert all((r, l) in pairs for l, r in pairs)


def test_routes_to_is_a_derangement_avoiding_partners():
    routes = {l: r for l, rel, r in fixture_facts() if rel == "routes_to"}
    partners = {l: r for l, rel, r in fixture_facts() if rel == "paired_with"}
    assert len(routes) == 40
    assert len(set(routes.values())) == 40  # a permutation of the items
    for left, right in routes.items():
        assert right != left
        assert right != partners[left]
        assert right.startswith("item_")


def test_routes_to_cycle_type():
    from ntkb.fixture import ROUTE_CYCLE_LENGTHS

    routes = {l: r for l, rel, r in fixture_facts() if rel == "routes_to"}
    lengths = []
    remaining = set(routes)
    while remaining:
        node = start = next(iter(remaining))
        count = 0
        while True:
            remaining.discard(node)
            node = routes[node]
            count += 1
            if node == start:
                break
        lengths.append(count)
    assert sorted(lengths) == sorted(ROUTE_CYCLE_LENGTHS)


def test_split_sizes_and_coverage():
    train, dev, test = fixture_triples()
    assert len(train) == TRAIN_SIZE
    assert len(dev) == DEV_SIZE
    assert len(test) == TEST_SIZE
    facts = set(fixture_facts())
    assert set(train) == facts  # every fact appears in training
    assert set(dev) <= facts and set(test) <= facts


def test_train_repetition_is_balanced():
    train, _, _ = fixture_triples()
    counts = Counter(train)
    assert max(counts.values()) - min(counts.values()) <= 1


def test_triples_deterministic_per_seed():
    assert fixture_triples(seed=13) == fixture_triples(seed=13)
    assert fixture_triples(seed=14) != fixture_triples(seed=13)


def test_kb_statistics():
    kb = build_fixture_kb()
    assert kb.n_entities == 50
    assert kb.n_relations == 3
    assert len(kb.train) == TRAIN_SIZE


def test_written_files_round_trip(tmp_path):
    write_fixture(tmp_path)
    train, dev, test = fixture_triples()
    got = [
        tuple(line.split("\t"))
        for line in (tmp_path / "train.txt").read_text().strip().split("\n")
    ]
    assert got == train


def test_shipped_data_matches_generator(tmp_path):
    """The files under data/fixture are exactly what the generator emits."""
    assert DATA_DIR.is_dir(), "fixture data directory missing"
    write_fixture(tmp_path)
    for name in ("train.txt", "dev.txt", "test.txt"):
        shipped = (DATA_DIR / name).read_bytes()
        fresh = (tmp_path / name).read_bytes()
        assert shipped == fresh, f"{name} differs from its generator"
