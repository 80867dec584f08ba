import numpy as np
import pytest

from ntkb import (
    KnowledgeBase,
    ParseError,
    VocabularyError,
    build_knowledge_base,
    load_knowledge_base,
    load_split,
)
from ntkb.kb import kb_with_vocabulary


def write_split(path, rows):
    path.write_text("".join("\t".join(r) + "\n" for r in rows), encoding="utf-8")


def test_load_split_keeps_file_order(tmp_path):
    rows = [("a", "r", "b"), ("c", "r", "a"), ("a", "s", "c")]
    p = tmp_path / "train.txt"
    write_split(p, rows)
    assert load_split(p) == rows


def test_load_split_skips_blank_lines(tmp_path):
    p = tmp_path / "train.txt"
    p.write_text("a\tr\tb\n\n   \nc\tr\ta\n", encoding="utf-8")
    assert load_split(p) == [("a", "r", "b"), ("c", "r", "a")]


def test_load_split_rejects_wrong_field_count(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("a\tr\tb\na\tb\n", encoding="utf-8")
    with pytest.raises(ParseError, match=r"bad\.txt:2"):
        load_split(p)


def test_load_split_frozen_vocab_rejects_unknown(tmp_path):
    p = tmp_path / "dev.txt"
    write_split(p, [("a", "r", "zzz")])
    with pytest.raises(VocabularyError, match="zzz"):
        load_split(p, entity_vocab={"a": 0}, relation_vocab={"r": 0})


def test_vocabulary_is_first_appearance_order():
    kb = build_knowledge_base(
        train=[("b", "r2", "a"), ("a", "r1", "c")],
        dev=[("d", "r1", "a")],
        test=[("e", "r3", "b")],
    )
    # left before right within a row, train before dev before test
    assert kb.entity_names == ["b", "a", "c", "d", "e"]
    assert kb.relation_names == ["r2", "r1", "r3"]


def test_encode_decode_round_trip(tiny_kb):
    raw = tiny_kb.decode(tiny_kb.train)
    again = tiny_kb.encode(raw)
    np.testing.assert_array_equal(again, tiny_kb.train)


def test_encode_unknown_token_raises(tiny_kb):
    with pytest.raises(VocabularyError, match="unicorn"):
        tiny_kb.encode([("unicorn", "is_a", "mammal")])


def test_contains_covers_every_split(tiny_kb):
    for split in (tiny_kb.train, tiny_kb.dev, tiny_kb.test):
        for row in split:
            assert tiny_kb.contains(row)
    assert not tiny_kb.contains((0, 0, 0)) or (0, 0, 0) in tiny_kb.members


def test_split_overlap_counts_shared_rows():
    shared = ("a", "r", "b")
    kb = build_knowledge_base(
        train=[shared, ("b", "r", "a")],
        dev=[shared],
        test=[("a", "r", "a")],
    )
    overlap = kb.split_overlap()
    assert overlap == {"train_dev": 1, "train_test": 0, "dev_test": 0}
    # overlap is reported, not removed
    assert len(kb.dev) == 1


def test_load_knowledge_base_round_trip(tmp_path):
    write_split(tmp_path / "train.txt", [("a", "r", "b"), ("b", "r", "c")])
    write_split(tmp_path / "dev.txt", [("c", "r", "a")])
    write_split(tmp_path / "test.txt", [("a", "r", "c")])
    kb = load_knowledge_base(
        tmp_path / "train.txt", tmp_path / "dev.txt", tmp_path / "test.txt"
    )
    assert isinstance(kb, KnowledgeBase)
    assert kb.n_entities == 3 and kb.n_relations == 1
    assert kb.decode(kb.test) == [("a", "r", "c")]


def test_kb_with_vocabulary_freezes_id_space():
    kb = kb_with_vocabulary(
        entity_names=["x", "y", "z"],
        relation_names=["r"],
        train=[("z", "r", "x")],
    )
    assert kb.entity_names == ["x", "y", "z"]
    np.testing.assert_array_equal(kb.train, [[2, 0, 0]])
    with pytest.raises(VocabularyError):
        kb_with_vocabulary(entity_names=["x"], relation_names=["r"], train=[("q", "r", "x")])
