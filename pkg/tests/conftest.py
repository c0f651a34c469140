import random

import numpy as np
import pytest

from rulesmith.kg import KnowledgeGraph, RelationTable, from_triples

WORKED_EXAMPLE_FACTS = [
    ("Alex", "isAffiliatedTo", "Club1"),
    ("Alex", "isAffiliatedTo", "Club2"),
    ("Bob", "isAffiliatedTo", "Club3"),
    ("Alex", "playsFor", "Club1"),
    ("Charlie", "playsFor", "Club2"),
]


@pytest.fixture
def worked_example_kg():
    """Five-fact fixture whose measure values are known by hand."""
    return from_triples(WORKED_EXAMPLE_FACTS)


@pytest.fixture
def toy_kg():
    from rulesmith.synth import make_toy_kg
    return make_toy_kg()


def random_int_kg(rng: random.Random, max_entities: int = 30,
                  max_relations: int = 8, max_triples: int = 200):
    """(KnowledgeGraph, augmented plain fact set) for oracle comparisons."""
    n_ent = rng.randint(3, max_entities)
    n_rel = rng.randint(1, max_relations)
    n_tri = rng.randint(1, max_triples)
    triples = set()
    for _ in range(n_tri):
        triples.add((rng.randrange(n_ent), rng.randrange(n_rel),
                     rng.randrange(n_ent)))
    rows = np.array(sorted(triples), dtype=np.int32).reshape(-1, 3)
    empty = np.empty((0, 3), dtype=np.int32)
    kg = KnowledgeGraph([f"e{i}" for i in range(n_ent)],
                        RelationTable([f"r{j}" for j in range(n_rel)]),
                        rows, empty, empty)
    facts = set()
    for h, r, t in triples:
        facts.add((h, r, t))
        facts.add((t, r + n_rel, h))
    return kg, facts
