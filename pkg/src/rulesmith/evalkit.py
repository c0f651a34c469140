"""Link-prediction evaluation under the filtered ranking protocol.

Every test triple (h, r, t) yields two queries: the tail query (h, r, ?)
and the head query answered as (t, inv_r, ?). Known-true answers from any
split other than the one being scored are filtered out of the candidate
pool before ranking, and ties share the average of the ranks they span.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .kg import KnowledgeGraph
from .ranker import RankedRule
from .reasoner import CompletionQuery, answer

log = logging.getLogger(__name__)

UNRANKED_POLICIES = ("midpoint", "worst")


@dataclass
class RelationStats:
    queries: int = 0
    unanswered: int = 0
    rr_sum: float = 0.0
    hit_sums: dict[int, int] = field(default_factory=dict)

    def mrr(self) -> float:
        return self.rr_sum / self.queries if self.queries else 0.0

    def hits(self, n: int) -> float:
        return self.hit_sums.get(n, 0) / self.queries if self.queries else 0.0


@dataclass
class EvalReport:
    mrr: float
    hits_at: dict[int, float]
    query_count: int
    unanswered: int
    tail_mrr: float
    head_mrr: float
    per_relation: dict[str, RelationStats]

    def to_lines(self) -> list[str]:
        lines = [
            f"queries={self.query_count}",
            f"unanswered={self.unanswered}",
            f"mrr={self.mrr:.6f}",
        ]
        for n in sorted(self.hits_at):
            lines.append(f"hits@{n}={self.hits_at[n]:.6f}")
        lines.append(f"tail_mrr={self.tail_mrr:.6f}")
        lines.append(f"head_mrr={self.head_mrr:.6f}")
        return lines

    def per_relation_table(self) -> list[str]:
        rows = ["relation\tqueries\tunanswered\tmrr"]
        for name in sorted(self.per_relation):
            s = self.per_relation[name]
            rows.append(f"{name}\t{s.queries}\t{s.unanswered}\t{s.mrr():.6f}")
        return rows


def rank_of_answer(scores: dict[int, Fraction], truth: int,
                   pool_size: int, policy: str = "midpoint") -> float:
    """Rank of the true answer among scored candidates plus the unscored rest.

    Ties average: with `higher` strictly better candidates and `tied` others
    at the same score, rank = higher + (tied + 1) / 2. A truth the rules
    never scored sits somewhere in the unscored remainder of the filtered
    pool; the midpoint policy charges the expected rank of a uniform
    position there, the worst policy charges the bottom.
    """
    if truth in scores:
        target = scores[truth]
        higher = sum(1 for v in scores.values() if v > target)
        tied = sum(1 for v in scores.values() if v == target) - 1
        return higher + (tied + 2) / 2.0
    if policy == "worst":
        return float(pool_size)
    # scored candidates all outrank it; it is uniform over the rest
    return (pool_size + 1 + len(scores)) / 2.0


def _query_rank(kg: KnowledgeGraph, rules: list[RankedRule],
                query: CompletionQuery, truth: int, known: set[int],
                policy: str) -> tuple[float, bool]:
    """(rank, answered) for one filtered query."""
    pool_size = kg.n_entities - len(known)
    if rules:
        result = answer(kg, rules, query)
        scores = {e: s for e, s in result.scores.items() if e not in known}
    else:
        scores = {}
    rank = rank_of_answer(scores, truth, pool_size, policy)
    return rank, truth in scores


def evaluate(kg: KnowledgeGraph,
             rules_by_relation: dict[int, list[RankedRule]],
             n_values: tuple[int, ...] = (1, 10),
             split: str = "test",
             unranked_policy: str = "midpoint") -> EvalReport:
    """Score ranked rules on a held-out split.

    rules_by_relation maps a relation id (forward or inverse) to the ranked
    rules answering queries on that relation. Relations with no entry are
    scored as fully unanswered rather than skipped, so missing rule files
    depress the aggregate instead of hiding.
    """
    if unranked_policy not in UNRANKED_POLICIES:
        raise ValueError(f"unranked_policy must be one of {UNRANKED_POLICIES}")
    triples = kg.split_triples(split)
    vocab = kg.vocab()
    per_relation: dict[str, RelationStats] = {}
    total = RelationStats()
    tail_stats = RelationStats()
    head_stats = RelationStats()
    n_values = tuple(sorted(set(n_values)))

    def run(source: int, rel: int, truth: int, side_stats: RelationStats) -> None:
        known = {t for t in kg.known_answers(source, rel) if t != truth}
        rules = rules_by_relation.get(rel, [])
        rank, answered = _query_rank(kg, rules, CompletionQuery(source, rel),
                                     truth, known, unranked_policy)
        rr = 1.0 / rank
        name = vocab.name(rel)
        stats = per_relation.setdefault(name, RelationStats())
        for s in (stats, total, side_stats):
            s.queries += 1
            s.rr_sum += rr
            if not answered:
                s.unanswered += 1
            for n in n_values:
                s.hit_sums[n] = s.hit_sums.get(n, 0) + (1 if rank <= n else 0)

    for h, r, t in triples:
        run(h, r, t, tail_stats)
        run(t, kg.relations.inverse(r), h, head_stats)

    return EvalReport(
        mrr=total.mrr(),
        hits_at={n: total.hits(n) for n in n_values},
        query_count=total.queries,
        unanswered=total.unanswered,
        tail_mrr=tail_stats.mrr(),
        head_mrr=head_stats.mrr(),
        per_relation=per_relation,
    )


def rule_set_report(kg: KnowledgeGraph,
                    rules_by_relation: dict[int, list[RankedRule]]) -> list[str]:
    """Summary lines: rule counts and length histogram per relation."""
    vocab = kg.vocab()
    lines = []
    grand = 0
    for rel in sorted(rules_by_relation):
        rules = rules_by_relation[rel]
        grand += len(rules)
        by_len: dict[int, int] = {}
        for rr in rules:
            by_len[len(rr.rule.body)] = by_len.get(len(rr.rule.body), 0) + 1
        hist = " ".join(f"len{k}={by_len[k]}" for k in sorted(by_len))
        lines.append(f"{vocab.name(rel)}: {len(rules)} rules {hist}".rstrip())
    lines.append(f"total: {grand} rules over {len(rules_by_relation)} relations")
    return lines
