"""Forward-chaining query answering: sum rule scores over body groundings.

score(e') = sum over rules of score(rule) * number of distinct body paths
from the query subject to e'. Unlike ranking, paths count with multiplicity
here. Head prediction is expressed as tail prediction under the inverse
relation, so only one direction exists in code.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .kg import KnowledgeGraph
from .ranker import RankedRule

log = logging.getLogger(__name__)

COUNT_SATURATION = 2**32 - 1


@dataclass(frozen=True)
class CompletionQuery:
    subject: int
    relation: int


@dataclass
class QueryResult:
    scores: dict[int, Fraction] = field(default_factory=dict)
    ranked: list[tuple[int, Fraction]] = field(default_factory=list)

    def top(self, n: int | None = None) -> list[tuple[int, Fraction]]:
        return self.ranked if n is None else self.ranked[:n]


def _ground_counts_from(kg: KnowledgeGraph, body: tuple[int, ...],
                        source: int) -> dict[int, int]:
    """Entity -> number of body instantiations starting at source."""
    counts = {source: 1}
    saturated = False
    for r in body:
        nxt: dict[int, int] = {}
        for u, c in counts.items():
            for v in kg.succ_array(u, r):
                v = int(v)
                total = nxt.get(v, 0) + c
                if total > COUNT_SATURATION:
                    total = COUNT_SATURATION
                    saturated = True
                nxt[v] = total
        counts = nxt
        if not counts:
            break
    if saturated:
        log.warning("grounding count saturated at %d for body %s from %d",
                    COUNT_SATURATION, body, source)
    return counts


def grounding_count(kg: KnowledgeGraph, body: tuple[int, ...] | list[int],
                    e: int, e2: int) -> int:
    """Distinct intermediate-entity assignments of body from e to e'."""
    return _ground_counts_from(kg, tuple(body), e).get(e2, 0)


def answer(kg: KnowledgeGraph, rules: list[RankedRule], query: CompletionQuery,
           top_n: int | None = None) -> QueryResult:
    """Score every entity reachable through some rule body from the subject.

    Rules whose body is exactly the one-step identity chain over the query
    relation are skipped: their only groundings restate facts of the queried
    relation itself. Entities keep strictly positive scores only; ranking is
    score descending, entity id ascending.
    """
    for rr in rules:
        if rr.rule.head != query.relation:
            raise ValueError(
                f"rule head {rr.rule.head} does not match query relation "
                f"{query.relation}")
    if not rules:
        log.info("no rules for relation %d; empty result", query.relation)
    scores: dict[int, Fraction] = {}
    for rr in rules:
        if rr.rule.body == (query.relation,):
            continue
        if rr.score <= 0:
            continue
        for e2, c in _ground_counts_from(kg, rr.rule.body, query.subject).items():
            scores[e2] = scores.get(e2, Fraction(0)) + rr.score * c
    scores = {e: s for e, s in scores.items() if s > 0}
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    if top_n is not None:
        ranked = ranked[:top_n]
    return QueryResult(scores=scores, ranked=ranked)
