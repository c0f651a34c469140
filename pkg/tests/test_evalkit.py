import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from rulesmith.evalkit import (UNRANKED_POLICIES, evaluate, rank_of_answer,
                               rule_set_report)
from rulesmith.kg import from_triples
from rulesmith.ranker import rank_rules
from rulesmith.rules import Rule, parse_rule


@pytest.fixture
def likes_kg():
    train = [
        ("a", "knows", "b"),
        ("a", "knows", "c"),
        ("a", "likes", "c"),
        ("d", "knows", "e"),
    ]
    test = [("a", "likes", "b")]
    return from_triples(train, test=test)


def ranked(kg, texts):
    vocab = kg.vocab()
    return rank_rules(kg, [parse_rule(t, vocab) for t in texts], "confidence")


def full_rules(kg):
    return {
        kg.relations.id_of("likes"): ranked(kg, ["likes(X,Y) <- knows(X,Y)"]),
        kg.relations.id_of("inv_likes"):
            ranked(kg, ["inv_likes(X,Y) <- inv_knows(X,Y)"]),
    }


def test_rank_of_answer_tie_averaging():
    scores = {1: F(2), 2: F(2), 3: F(1)}
    assert rank_of_answer(scores, 1, 10) == 1.5
    assert rank_of_answer(scores, 2, 10) == 1.5
    assert rank_of_answer(scores, 3, 10) == 3.0
    assert rank_of_answer({5: F(7)}, 5, 10) == 1.0


def test_rank_of_answer_unranked_policies():
    scores = {1: F(2), 2: F(1), 3: F(1)}
    # truth sits uniformly among the 10 - 3 unscored pool slots
    assert rank_of_answer(scores, 9, 10, "midpoint") == (10 + 1 + 3) / 2.0
    assert rank_of_answer(scores, 9, 10, "worst") == 10.0
    assert rank_of_answer({}, 9, 4, "midpoint") == 2.5
    assert rank_of_answer({}, 9, 4, "worst") == 4.0


@given(st.dictionaries(st.integers(0, 50),
                       st.fractions(min_value=F(1, 100), max_value=F(100)),
                       max_size=20),
       st.integers(0, 50), st.integers(1, 30),
       st.sampled_from(UNRANKED_POLICIES))
def test_rank_bounds(scores, truth, extra, policy):
    pool = len(scores) + extra + (0 if truth in scores else 1)
    rank = rank_of_answer(scores, truth, pool, policy)
    assert rank >= 1.0
    assert rank <= pool
    m = rank_of_answer(scores, truth, pool, "midpoint")
    w = rank_of_answer(scores, truth, pool, "worst")
    assert m <= w


def test_evaluate_filters_known_answers(likes_kg):
    report = evaluate(likes_kg, full_rules(likes_kg), n_values=(1, 2))
    # tail query (a, likes, ?): c is filtered as a known train answer, so the
    # truth b is ranked alone; head query ranks a alone as well.
    assert report.query_count == 2
    assert report.unanswered == 0
    assert report.mrr == 1.0
    assert report.tail_mrr == 1.0 and report.head_mrr == 1.0
    assert report.hits_at == {1: 1.0, 2: 1.0}


def test_evaluate_missing_relation_counts_as_unanswered(likes_kg):
    report = evaluate(likes_kg, {}, n_values=(1,))
    assert report.query_count == 2
    assert report.unanswered == 2
    # filtered pools: tail 5-1=4 entities, head 5-0=5; midpoint ranks
    assert report.mrr == pytest.approx((1 / 2.5 + 1 / 3.0) / 2)
    assert report.hits_at[1] == 0.0


def test_evaluate_worst_policy_is_harsher(likes_kg):
    mid = evaluate(likes_kg, {}, unranked_policy="midpoint")
    worst = evaluate(likes_kg, {}, unranked_policy="worst")
    assert worst.mrr < mid.mrr
    assert worst.mrr == pytest.approx((1 / 4 + 1 / 5) / 2)


def test_evaluate_rejects_unknown_policy(likes_kg):
    with pytest.raises(ValueError):
        evaluate(likes_kg, {}, unranked_policy="hopeful")


def test_evaluate_head_side_uses_inverse_rules(likes_kg):
    rules = full_rules(likes_kg)
    del rules[likes_kg.relations.id_of("inv_likes")]
    report = evaluate(likes_kg, rules)
    assert report.tail_mrr == 1.0
    assert report.head_mrr == pytest.approx(1 / 3.0)  # midpoint of pool 5
    assert report.unanswered == 1


def test_per_relation_stats(likes_kg):
    report = evaluate(likes_kg, full_rules(likes_kg))
    assert set(report.per_relation) == {"likes", "inv_likes"}
    assert report.per_relation["likes"].queries == 1
    assert report.per_relation["likes"].mrr() == 1.0
    table = report.per_relation_table()
    assert table[0] == "relation\tqueries\tunanswered\tmrr"
    assert any(row.startswith("likes\t1\t0\t1.000000") for row in table)


def test_report_lines_format(likes_kg):
    report = evaluate(likes_kg, full_rules(likes_kg), n_values=(10, 1))
    lines = report.to_lines()
    assert lines[0] == "queries=2"
    assert lines[1] == "unanswered=0"
    assert lines[2] == "mrr=1.000000"
    assert lines[3] == "hits@1=1.000000"
    assert lines[4] == "hits@10=1.000000"
    assert lines[5] == "tail_mrr=1.000000"
    assert lines[6] == "head_mrr=1.000000"


def test_rule_set_report_lines(likes_kg):
    lines = rule_set_report(likes_kg, full_rules(likes_kg))
    assert any(line.startswith("likes: 1 rules len1=1") for line in lines)
    assert lines[-1] == "total: 2 rules over 2 relations"


def test_evaluate_on_valid_split():
    train = [("a", "knows", "b"), ("a", "likes", "b")]
    valid = [("a", "likes", "c"), ("a", "knows", "c")]
    kg = from_triples(train, valid=valid)
    # valid triples include a knows fact, so the likes query has a body path
    rules = {
        kg.relations.id_of("likes"):
            ranked(kg, ["likes(X,Y) <- knows(X,Y)"]),
    }
    report = evaluate(kg, rules, split="valid")
    assert report.query_count == 4  # two valid triples, two sides each
    tail_likes = report.per_relation["likes"]
    assert tail_likes.queries == 1
    # truth c is not reachable from train facts alone: knows(a,c) is valid-only
    assert tail_likes.unanswered == 1


def _random_name_kg(rng):
    ents = [f"e{i}" for i in range(rng.randint(3, 10))]
    rels = ["r0", "r1", "r2"]

    def trip():
        return (rng.choice(ents), rng.choice(rels), rng.choice(ents))

    train = sorted({trip() for _ in range(rng.randint(3, 30))})
    test = sorted({trip() for _ in range(rng.randint(1, 5))})
    return train, test


def _random_rules(kg, rng, measure="pca"):
    all_ids = list(kg.relations.all_ids())
    rules_by_relation = {}
    for rid in rng.sample(all_ids, k=min(4, len(all_ids))):
        bodies = {tuple(rng.choice(all_ids) for _ in range(rng.randint(1, 3)))
                  for _ in range(4)}
        rules = [Rule(rid, b) for b in sorted(bodies)]
        rules_by_relation[rid] = rank_rules(kg, rules, measure)
    return rules_by_relation


@given(st.integers(0, 10**9))
def test_metric_bounds_and_hits_monotone(seed):
    rng = random.Random(seed)
    train, test = _random_name_kg(rng)
    kg = from_triples(train, test=test)
    report = evaluate(kg, _random_rules(kg, rng), n_values=(1, 3, 10))
    assert 0.0 <= report.mrr <= 1.0
    assert 0.0 <= report.hits_at[1] <= report.hits_at[3] <= report.hits_at[10] <= 1.0
    assert report.unanswered <= report.query_count


@given(st.integers(0, 10**9))
def test_extra_known_answer_never_worsens_mrr(seed):
    # filtering removes competitors only, so a new known-true triple built
    # from train names cannot lower any query's reciprocal rank
    rng = random.Random(seed)
    train, test = _random_name_kg(rng)
    kg1 = from_triples(train, test=test)
    rules = _random_rules(kg1, rng)
    ents = sorted({x for h, _, t in train for x in (h, t)})
    rels = sorted({r for _, r, _ in train})
    competitor = (rng.choice(ents), rng.choice(rels), rng.choice(ents))
    kg2 = from_triples(train, valid=[competitor], test=test)
    before = evaluate(kg1, rules)
    after = evaluate(kg2, rules)
    assert after.mrr >= before.mrr - 1e-12


def _swap_direction(name):
    return name[4:] if name.startswith("inv_") else f"inv_{name}"


@given(st.integers(0, 10**9))
def test_inverted_copy_scores_identically(seed):
    # reversing every triple and relabeling each relation with its inverse
    # swaps head and tail queries but changes no candidate score
    rng = random.Random(seed)
    train, test = _random_name_kg(rng)
    kg1 = from_triples(train, test=test)
    kg2 = from_triples([(t, r, h) for h, r, t in train],
                       test=[(t, r, h) for h, r, t in test])
    rules1 = _random_rules(kg1, rng)
    vocab1 = kg1.vocab()
    rules2 = {}
    for rid, ranked_rules in rules1.items():
        rid2 = kg2.relations.id_of(_swap_direction(vocab1.name(rid)))
        mapped = [Rule(rid2, tuple(
            kg2.relations.id_of(_swap_direction(vocab1.name(b)))
            for b in rr.rule.body)) for rr in ranked_rules]
        rules2[rid2] = rank_rules(kg2, mapped, "pca")
    r1 = evaluate(kg1, rules1)
    r2 = evaluate(kg2, rules2)
    assert r1.mrr == pytest.approx(r2.mrr, abs=1e-12)
    assert r1.hits_at == r2.hits_at
    assert r1.tail_mrr == pytest.approx(r2.head_mrr, abs=1e-12)
    assert r1.head_mrr == pytest.approx(r2.tail_mrr, abs=1e-12)
    assert r1.unanswered == r2.unanswered
