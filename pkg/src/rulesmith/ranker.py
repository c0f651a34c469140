"""Rule quality on train facts: support, coverage, confidence, PCA confidence.

All four measures count distinct (source, target) pairs, never paths, so the
grounding kernel composes the body chain left to right as a relational join
over the sorted adjacency arrays, deduplicating after every step. Measures
are kept as exact rationals; files render them with fixed precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from .kg import KnowledgeGraph
from .rules import Rule, RelationVocab, parse_rule, print_rule

MEASURES = ("none", "coverage", "confidence", "pca")

# Rows expanded per join chunk; bounds transient memory, not the result.
_CHUNK_ROWS = 4_000_000


@dataclass(frozen=True)
class RuleQuality:
    support: int
    coverage: Fraction
    confidence: Fraction
    pca_confidence: Fraction

    def measure(self, name: str) -> Fraction:
        if name not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}")
        if name == "none":
            return Fraction(1)
        if name == "pca":
            return self.pca_confidence
        return getattr(self, name)


@dataclass(frozen=True)
class RankedRule:
    rule: Rule
    quality: RuleQuality
    score: Fraction


def _join_step(kg: KnowledgeGraph, keys: np.ndarray, r: int) -> np.ndarray:
    """One composition step: pairs (s, c) joined with facts (c, r, t) -> (s, t)."""
    rheads, rtails = kg.rel_arrays(r)
    if len(rheads) == 0:
        return np.empty(0, dtype=np.int64)
    base = kg.key_base
    src = keys // base
    cur = keys % base
    lo = np.searchsorted(rheads, cur, "left")
    hi = np.searchsorted(rheads, cur, "right")
    counts = hi - lo
    parts = []
    start = 0
    n = len(keys)
    while start < n:
        stop = start
        budget = 0
        while stop < n and (budget == 0 or budget + counts[stop] <= _CHUNK_ROWS):
            budget += counts[stop]
            stop += 1
        c = counts[start:stop]
        total = int(c.sum())
        if total:
            offsets = np.arange(total) - np.repeat(np.cumsum(c) - c, c)
            idx = np.repeat(lo[start:stop], c) + offsets
            out = np.repeat(src[start:stop], c) * base + rtails[idx]
            parts.append(np.unique(out))
        start = stop
    if not parts:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(parts)) if len(parts) > 1 else parts[0]


def _compose(kg: KnowledgeGraph, body: tuple[int, ...]) -> np.ndarray:
    heads, tails = kg.rel_arrays(body[0])
    if len(heads) == 0:
        return np.empty(0, dtype=np.int64)
    keys = np.unique(heads.astype(np.int64) * kg.key_base + tails)
    for r in body[1:]:
        if len(keys) == 0:
            break
        keys = _join_step(kg, keys, r)
    return keys


def _distinct_sorted(a: np.ndarray) -> int:
    return 0 if len(a) == 0 else int(np.count_nonzero(a[1:] != a[:-1])) + 1


def body_pair_keys(kg: KnowledgeGraph, body: tuple[int, ...]) -> np.ndarray:
    """Distinct connected pairs as sorted int64 keys src * key_base + dst.

    Composes from whichever end of the chain has fewer distinct start
    entities; the reversed-and-inverted chain yields the same pair set with
    the key halves swapped.
    """
    inv = kg.relations.inverse
    fwd_starts = _distinct_sorted(kg.rel_arrays(body[0])[0])
    rev_starts = _distinct_sorted(kg.rel_arrays(inv(body[-1]))[0])
    if rev_starts < fwd_starts:
        rev = tuple(inv(r) for r in reversed(body))
        keys = _compose(kg, rev)
        base = kg.key_base
        return np.sort((keys % base) * base + keys // base)
    return _compose(kg, body)


def body_pairs(kg: KnowledgeGraph, body: tuple[int, ...] | list[int]) -> set[tuple[int, int]]:
    """The pair set itself; convenience wrapper over the keyed kernel."""
    base = kg.key_base
    keys = body_pair_keys(kg, tuple(body))
    return {(int(k) // base, int(k) % base) for k in keys}


def score_rule(kg: KnowledgeGraph, rule: Rule) -> RuleQuality:
    """Ground one rule and compute all four measures exactly.

    A zero denominator yields 0 for that measure, so a head relation without
    train facts cannot promote anything.
    """
    bkeys = body_pair_keys(kg, rule.body)
    hkeys = kg.pair_keys(rule.head)
    support = int(np.intersect1d(bkeys, hkeys, assume_unique=True).size)
    n_body = len(bkeys)
    n_head = len(hkeys)
    if n_body:
        srcs = (bkeys // kg.key_base).astype(np.intp)
        pca_den = int(kg.heads_with_fact(rule.head)[srcs].sum())
    else:
        pca_den = 0
    return RuleQuality(
        support=support,
        coverage=Fraction(support, n_head) if n_head else Fraction(0),
        confidence=Fraction(support, n_body) if n_body else Fraction(0),
        pca_confidence=Fraction(support, pca_den) if pca_den else Fraction(0),
    )


def rank_rules(kg: KnowledgeGraph, candidates, measure: str = "pca") -> list[RankedRule]:
    """Score, prune zero-support rules, and sort by the chosen measure.

    Ties break on support, then canonical text. measure "none" keeps every
    rule with positive support at uniform score 1.
    """
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")
    rules: Iterable[Rule] = getattr(candidates, "rules", candidates)
    vocab = kg.vocab()
    scored = []
    for rule in rules:
        quality = score_rule(kg, rule)
        if quality.support == 0:
            continue
        scored.append(RankedRule(rule, quality, quality.measure(measure)))
    scored.sort(key=lambda rr: (-rr.score, -rr.quality.support,
                                print_rule(rr.rule, vocab)))
    return scored


def write_ranked_rules(ranked: list[RankedRule], vocab: RelationVocab,
                       path: str | Path) -> None:
    """TSV: canonical text, support, coverage, confidence, pca (6 decimals)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rr in ranked:
            q = rr.quality
            fh.write("\t".join([
                print_rule(rr.rule, vocab),
                str(q.support),
                f"{float(q.coverage):.6f}",
                f"{float(q.confidence):.6f}",
                f"{float(q.pca_confidence):.6f}",
            ]) + "\n")


def read_ranked_rules(path: str | Path, vocab: RelationVocab, max_len: int,
                      measure: str = "pca") -> list[RankedRule]:
    """Reload a ranked-rules file; measures come back as parsed decimals."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            text, sup, cov, conf, pca = line.split("\t")
            quality = RuleQuality(int(sup), Fraction(cov), Fraction(conf),
                                  Fraction(pca))
            out.append(RankedRule(parse_rule(text, vocab, max_len=max_len),
                                  quality, quality.measure(measure)))
    return out
