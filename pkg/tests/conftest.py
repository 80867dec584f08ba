import numpy as np
import pytest

from ntkb import KnowledgeBase, ParameterLayout, init_parameters, unpack


@pytest.fixture
def tiny_kb():
    """Six entities, two relations, a handful of facts in every split."""
    train = [
        ("cat", "is_a", "mammal"),
        ("dog", "is_a", "mammal"),
        ("sparrow", "is_a", "bird"),
        ("cat", "eats", "sparrow"),
        ("dog", "eats", "cat"),
    ]
    dev = [("sparrow", "eats", "worm")]
    test = [("worm", "is_a", "mammal")]
    from ntkb import build_knowledge_base

    return build_knowledge_base(train=train, dev=dev, test=test)


def make_params(kind, dim, slices, n_entities, n_relations, seed=0, share_u=False):
    layout = ParameterLayout(
        kind=kind,
        dim=dim,
        slices=slices,
        n_entities=n_entities,
        n_relations=n_relations,
        share_u=share_u,
    )
    rng = np.random.default_rng(seed)
    embeddings = rng.standard_normal((n_entities, dim)) * 0.3
    x = init_parameters(layout, embeddings, seed=seed)
    return layout, x, unpack(layout, x)
