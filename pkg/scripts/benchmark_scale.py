"""Time rule ranking on a synthetic million-triple knowledge graph.

Builds a uniform random KG at a chosen scale, assembles a candidate set
mixing sampled closed-path bodies (guaranteed support, so the joins do
real work) with uniform random bodies, and reports wall time plus peak
resident memory for scoring them all.
"""

import argparse
import random
import resource
import time

from rulesmith.ranker import rank_rules
from rulesmith.rules import Rule
from rulesmith.sampler import abstract_to_samples, sample_closed_paths
from rulesmith.synth import make_random_kg


def sampled_rules(kg, count, rng_seed):
    rules = []
    rng = random.Random(rng_seed)
    populated = [r for r in kg.relations.all_ids() if kg.fact_count(r) > 0]
    while len(rules) < count and populated:
        target = rng.choice(populated)
        paths = sample_closed_paths(kg, target, 3, 2, rng.randrange(2**31), 10)
        for sample in abstract_to_samples(paths):
            rules.append(sample.rule)
            if len(rules) == count:
                break
    return rules


def random_rules(kg, count, rng_seed):
    rng = random.Random(rng_seed)
    all_ids = list(kg.relations.all_ids())
    return [Rule(rng.choice(all_ids),
                 tuple(rng.choice(all_ids) for _ in range(1 + i % 3)))
            for i in range(count)]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--entities", type=int, default=123_000)
    parser.add_argument("--relations", type=int, default=37)
    parser.add_argument("--triples", type=int, default=1_000_000)
    parser.add_argument("--rules", type=int, default=100)
    parser.add_argument("--rng-seed", type=int, default=0)
    parser.add_argument("--measure", default="pca")
    args = parser.parse_args()

    t0 = time.perf_counter()
    kg = make_random_kg(args.entities, args.relations, args.triples,
                        args.rng_seed)
    build = time.perf_counter() - t0
    print(f"built {args.triples} triples over {args.entities} entities "
          f"in {build:.1f}s")

    half = args.rules // 2
    rules = sampled_rules(kg, half, args.rng_seed) \
        + random_rules(kg, args.rules - half, args.rng_seed)
    t0 = time.perf_counter()
    ranked = rank_rules(kg, rules, args.measure)
    rank_time = time.perf_counter() - t0
    peak_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    print(f"ranked {len(rules)} rules in {rank_time:.1f}s "
          f"({len(ranked)} with support), peak rss {peak_mb:.0f} MiB")


if __name__ == "__main__":
    main()
