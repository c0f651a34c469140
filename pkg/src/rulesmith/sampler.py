"""Closed-path sampling: breadth-first path enumeration around seed triples.

For a target relation we draw seed facts (h, target, t) and enumerate every
train path h -> ... -> t up to the length bound, over forward and inverse
edges alike. Discarding the intermediate entities turns each path into a
rule-shaped sample for the prompt stage.
"""

from __future__ import annotations

import hashlib
import logging
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .kg import KnowledgeGraph
from .rules import Rule, RelationVocab, print_rule

log = logging.getLogger(__name__)

DEFAULT_PER_SEED_CAP = 100
DEFAULT_MAX_EXPANSIONS = 100_000


@dataclass(frozen=True)
class ClosedPath:
    seed: tuple[int, int, int]
    relations: tuple[int, ...]
    entities: tuple[int, ...]


@dataclass(frozen=True)
class RuleSample:
    rule: Rule
    multiplicity: int = 1


def derive_seed(rng_seed: int, label: str) -> int:
    """Stable per-label RNG seed; independent of interning or dict order."""
    digest = hashlib.sha256(f"{rng_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _paths_for_seed(kg: KnowledgeGraph, seed: tuple[int, int, int], max_len: int,
                    per_seed_cap: int, max_expansions: int) -> list[ClosedPath]:
    h, target, t = seed
    inverse = kg.relations.inverse
    found: list[ClosedPath] = []
    frontier: list[tuple[tuple[int, ...], tuple[int, ...]]] = [((h,), ())]
    expansions = 0
    for depth in range(1, max_len + 1):
        nxt = []
        for ents, rels in frontier:
            u = ents[-1]
            for r in kg.relations.all_ids():
                for v in kg.succ_array(u, r):
                    v = int(v)
                    if rels and ents[-2] == v and rels[-1] == inverse(r):
                        continue  # immediate reversal of the edge just taken
                    expansions += 1
                    new = (ents + (v,), rels + (r,))
                    if v == t and not (depth == 1 and r == target):
                        found.append(ClosedPath(seed, new[1], new[0]))
                        if len(found) >= per_seed_cap:
                            log.info("per-seed path cap %d hit for seed %s",
                                     per_seed_cap, seed)
                            return found
                    nxt.append(new)
                    if expansions >= max_expansions:
                        log.warning("expansion budget %d hit for seed %s",
                                    max_expansions, seed)
                        return found
        frontier = nxt
    return found


def sample_closed_paths(kg: KnowledgeGraph, target: int, max_len: int,
                        seed_count: int, rng_seed: int,
                        per_seed_cap: int = DEFAULT_PER_SEED_CAP,
                        max_expansions: int = DEFAULT_MAX_EXPANSIONS) -> list[ClosedPath]:
    """All closed paths of length <= max_len for up to seed_count seed facts.

    Seeds are drawn uniformly without replacement from the target's train
    facts. The one-edge path restating the seed fact itself is excluded; the
    target relation may still appear anywhere else in a path. Deterministic
    for a fixed rng_seed.
    """
    heads, tails = kg.rel_arrays(target)
    n = len(heads)
    if n == 0 or max_len < 1:
        return []
    rng = random.Random(derive_seed(rng_seed, kg.relations.name(target)))
    picks = sorted(rng.sample(range(n), min(seed_count, n)))
    paths: list[ClosedPath] = []
    for i in picks:
        seed = (int(heads[i]), target, int(tails[i]))
        paths.extend(_paths_for_seed(kg, seed, max_len, per_seed_cap, max_expansions))
    return paths


def abstract_to_samples(paths: list[ClosedPath]) -> list[RuleSample]:
    """Deduplicate paths into rule samples, keeping a multiplicity count."""
    counts: Counter[tuple[int, tuple[int, ...]]] = Counter()
    for p in paths:
        counts[(p.seed[1], p.relations)] += 1
    return [RuleSample(Rule(head, body), m)
            for (head, body), m in sorted(counts.items())]


def dump_samples(samples: list[RuleSample], vocab: RelationVocab,
                 path: str | Path) -> None:
    """One sample per line: canonical rule text, tab, multiplicity."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(f"{print_rule(s.rule, vocab)}\t{s.multiplicity}\n")


def load_samples(path: str | Path, vocab: RelationVocab,
                 max_len: int) -> list[RuleSample]:
    from .rules import parse_rule

    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            text, _, mult = line.partition("\t")
            out.append(RuleSample(parse_rule(text, vocab, max_len=max_len),
                                  int(mult) if mult else 1))
    return out
