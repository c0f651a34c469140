"""Deterministic synthetic knowledge graphs for tests and benchmarks.

Four generators: a small family-structured KG with held-out answerable
queries, a fixed-statistics kinship corpus matching published dataset
sizes, a uniform random KG builder for scale benchmarks, and a
planted-rules-versus-noise KG whose measure arithmetic is worked out by
hand so ranking measures separate cleanly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .kg import KnowledgeGraph, RelationTable, from_triples
from .sampler import derive_seed

Triple = tuple[str, str, str]

FAMILY_RELATIONS = ["aunt", "brother", "daughter", "father", "husband",
                    "mother", "nephew", "niece", "sister", "son", "uncle",
                    "wife"]

FAMILY_ENTITIES = 3_007
FAMILY_TRIPLES = 28_356


def make_toy_kg(n_families: int = 40) -> KnowledgeGraph:
    """Small family KG with held-out facts recoverable from chain rules.

    Every couple has husband and wife facts and one to three children with
    father and mother facts. Selected husband and father facts move to the
    test split, selected mother facts to valid; the remaining structure
    keeps each held-out fact derivable (husband from the reverse wife edge,
    father from a reverse-wife-then-mother chain).
    """
    train: list[Triple] = []
    valid: list[Triple] = []
    test: list[Triple] = []
    for f in range(n_families):
        dad, mom = f"dad{f}", f"mom{f}"
        kids = [f"kid{f}_{c}" for c in range(1 + f % 3)]
        (test if f % 7 == 3 else train).append((dad, "husband", mom))
        train.append((mom, "wife", dad))
        for c, kid in enumerate(kids):
            held_father = f % 11 == 5 and c == 0
            held_mother = f % 13 == 6 and c == 0
            (test if held_father else train).append((dad, "father", kid))
            (valid if held_mother else train).append((mom, "mother", kid))
            train.append((kid, "child", dad))
            train.append((kid, "child", mom))
    return from_triples(train, valid, test)


def write_kg(kg: KnowledgeGraph, directory: str | Path) -> dict[str, Path]:
    """Dump all three splits as TSV files under directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for split in ("train", "valid", "test"):
        path = directory / f"{split}.txt"
        with open(path, "w", encoding="utf-8") as fh:
            for h, r, t in kg.split_triples(split):
                fh.write(f"{kg.entity_names[h]}\t{kg.relations.name(r)}"
                         f"\t{kg.entity_names[t]}\n")
        paths[split] = path
    return paths


def family_standin_triples() -> tuple[list[Triple], list[Triple], list[Triple]]:
    """Kinship-shaped corpus with exactly 3,007 entities, 12 relations
    and 28,356 distinct forward triples across the splits.

    Relation r links person i to person (i + r + 1) mod 3007, so triples
    are distinct by construction and every entity occurs. The first eight
    relations are complete cycles; the last four are truncated to land on
    the published triple total and feed the valid and test splits.
    """
    n = FAMILY_ENTITIES
    full, partial = 8, 4
    per_partial = (FAMILY_TRIPLES - full * n) // partial
    assert full * n + partial * per_partial == FAMILY_TRIPLES
    train: list[Triple] = []
    valid: list[Triple] = []
    test: list[Triple] = []
    for r, name in enumerate(FAMILY_RELATIONS):
        count = n if r < full else per_partial
        for i in range(count):
            triple = (f"person{i}", name, f"person{(i + r + 1) % n}")
            if r < full or i < per_partial - 215:
                train.append(triple)
            elif i < per_partial - 115:
                valid.append(triple)
            else:
                test.append(triple)
    return train, valid, test


def write_family_standin(directory: str | Path) -> dict[str, Path]:
    train, valid, test = family_standin_triples()
    return write_kg(from_triples(train, valid, test), directory)


def make_random_kg(n_entities: int, n_relations: int, n_triples: int,
                   rng_seed: int = 0) -> KnowledgeGraph:
    """Uniform random KG with exactly n_triples distinct forward facts.

    Builds the arrays directly so million-triple graphs come up in
    seconds; entity and relation names are synthesized.
    """
    space = n_entities * n_relations * n_entities
    if n_triples > space:
        raise ValueError("more triples requested than distinct triples exist")
    rng = np.random.default_rng(derive_seed(rng_seed, "random-kg"))
    keys = np.empty(0, dtype=np.int64)
    while len(keys) < n_triples:
        need = n_triples - len(keys)
        h = rng.integers(0, n_entities, size=2 * need + 16)
        r = rng.integers(0, n_relations, size=2 * need + 16)
        t = rng.integers(0, n_entities, size=2 * need + 16)
        batch = (h * n_relations + r) * n_entities + t
        keys = np.unique(np.concatenate([keys, batch]))
    keys = keys[:n_triples]
    t = keys % n_entities
    hr = keys // n_entities
    rows = np.stack([hr // n_relations, hr % n_relations, t],
                    axis=1).astype(np.int32)
    empty = np.empty((0, 3), dtype=np.int32)
    return KnowledgeGraph([f"e{i}" for i in range(n_entities)],
                          RelationTable([f"r{j}" for j in range(n_relations)]),
                          rows, empty, empty)


def make_planted_kg() -> KnowledgeGraph:
    """KG where the four ranking measures produce strictly ordered MRR.

    One target relation with 100 train pairs and 12 test pairs. Candidate
    length-1 rule bodies with hand-set statistics:

    - g0,g1,g2: reliable; ~33 train pairs each, no false pairs except the
      test answers they supply, so confidence ~0.87 and exact PCA 1.
    - b: broad distractor; 90 train pairs (coverage 0.9) drowned in 500
      false pairs from known sources (confidence and PCA ~0.15). Its test
      edges point four queries at wrong entities.
    - p: open-world rule; 8 train pairs plus 32 false pairs whose sources
      have no target fact, so confidence 2/11 but PCA exactly 1. Sole
      supplier of the last four test answers.
    - z0..z9: noise; support 1, 19 false pairs from known sources
      (PCA 1/20), and an edge from every test source to a decoy entity.

    Test queries split three ways: answered by two g rules, additionally
    poisoned by b, or answered only by p. Every decoy collects all ten
    noise votes, so unweighted scoring ranks decoys first; coverage
    rescues only unpoisoned queries; confidence also beats b; PCA alone
    weights p highly enough to beat the noise everywhere.
    """
    train: list[Triple] = []
    test: list[Triple] = []
    for i in range(100):
        src, dst = f"src{i}", f"dst{i}"
        train.append((src, "target", dst))
        train.append((src, f"g{i % 3}", dst))
        if i % 10 != 0:
            train.append((src, "b", dst))
        for m in range(5):
            train.append((src, "b", f"bjunk{i}_{m}"))
        if i >= 92:
            train.append((src, "p", dst))
    for m in range(32):
        train.append((f"pfree{m}", "p", f"pjunk{m}"))
    for m in range(10):
        train.append((f"src{m}", f"z{m}", f"dst{m}"))
        for n in range(19):
            train.append((f"src{(m + n + 1) % 100}", f"z{m}", f"zjunk{m}_{n}"))
    for j in range(12):
        src, dst = f"qsrc{j}", f"qdst{j}"
        test.append((src, "target", dst))
        if j < 8:
            train.append((src, f"g{j % 3}", dst))
            train.append((src, f"g{(j + 1) % 3}", dst))
        if 4 <= j < 8:
            train.append((src, "b", f"wb{j}"))
        if j >= 8:
            train.append((src, "p", dst))
        for m in range(10):
            train.append((src, f"z{m}", f"wn{j}"))
    return from_triples(train, (), test)
