"""Command-line pipeline: ingest, sample, generate, rank, reason, eval.

Each stage writes its outputs under one run directory using per-relation
files named by relation id and sanitized name, and every command that
writes files finishes by writing a manifest with the full configuration
and a hash of every output, so offline runs are repeatable bit for bit.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from pathlib import Path

from .config import ConfigError, PipelineConfig, load_config
from .evalkit import evaluate, rule_set_report
from .generator import (AuthError, TransportError, Usage, estimate_cost,
                        generate, make_backend)
from .kg import KGLoadError, KnowledgeGraph, load_kg
from .ranker import rank_rules, read_ranked_rules, write_ranked_rules
from .reasoner import CompletionQuery, answer
from .rules import RuleParseError, parse_rule, print_rule
from .sampler import abstract_to_samples, dump_samples, load_samples, sample_closed_paths

log = logging.getLogger(__name__)

SAMPLE_DIR = "samples"
CANDIDATE_DIR = "candidates"
RANKED_DIR = "ranked"
MANIFEST = "manifest.json"


class StageError(RuntimeError):
    def __init__(self, stage: str, relation: str, cause: Exception):
        super().__init__(f"{stage} failed for relation {relation}: {cause}")
        self.stage = stage
        self.relation = relation


def sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]+", "-", name)


def relation_file(directory: Path, rid: int, name: str, suffix: str) -> Path:
    return directory / f"{rid:03d}_{sanitize(name)}.{suffix}"


def parse_relation_file(path: Path) -> int:
    return int(path.name.split("_", 1)[0])


def load_dataset(cfg: PipelineConfig) -> KnowledgeGraph:
    if not cfg.train:
        raise ConfigError("no train path given")
    return load_kg(cfg.train, cfg.valid or None, cfg.test or None)


def write_manifest(cfg: PipelineConfig) -> Path:
    """Hash every run artifact; stable key order, relative POSIX paths."""
    out = Path(cfg.out_dir)
    hashes = {}
    for path in sorted(out.rglob("*")):
        if not path.is_file() or path.name == MANIFEST:
            continue
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        hashes[path.relative_to(out).as_posix()] = digest
    manifest = {"config": cfg.to_dict(), "files": hashes}
    target = out / MANIFEST
    target.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                      encoding="utf-8")
    return target


def stage_sample(kg: KnowledgeGraph, cfg: PipelineConfig) -> int:
    """One sample file per relation that has facts; returns files written."""
    out = Path(cfg.out_dir) / SAMPLE_DIR
    out.mkdir(parents=True, exist_ok=True)
    vocab = kg.vocab()
    written = 0
    for rid in kg.relations.all_ids():
        if kg.fact_count(rid) == 0:
            continue
        name = kg.relations.name(rid)
        try:
            paths = sample_closed_paths(kg, rid, cfg.max_len, cfg.seed_count,
                                        cfg.rng_seed, cfg.per_seed_cap)
            samples = abstract_to_samples(paths)
            dump_samples(samples, vocab, relation_file(out, rid, name, "tsv"))
        except Exception as exc:
            raise StageError("sample", name, exc) from exc
        written += 1
    if written == 0:
        log.warning("no relations with facts; nothing sampled")
    return written


def stage_generate(kg: KnowledgeGraph, cfg: PipelineConfig) -> None:
    """Candidate rules per relation plus a rejection report and cost file."""
    sample_dir = Path(cfg.out_dir) / SAMPLE_DIR
    out = Path(cfg.out_dir) / CANDIDATE_DIR
    out.mkdir(parents=True, exist_ok=True)
    vocab = kg.vocab()
    gen_cfg = cfg.generation_config()
    backend = make_backend(gen_cfg)
    rejections: list[tuple[str, str, str]] = []
    total_in = total_out = 0
    for path in sorted(sample_dir.glob("*.tsv")):
        rid = parse_relation_file(path)
        name = kg.relations.name(rid)
        try:
            samples = load_samples(path, vocab, cfg.max_len)
            result = generate(kg, rid, gen_cfg, samples=samples,
                              backend=backend)
        except AuthError:
            raise
        except Exception as exc:
            raise StageError("generate", name, exc) from exc
        with open(relation_file(out, rid, name, "rules.txt"), "w",
                  encoding="utf-8") as fh:
            for rule in result.rules:
                fh.write(print_rule(rule, vocab) + "\n")
        rejections.extend((name, kind, line) for line, kind in result.rejected)
        total_in += result.usage.input_tokens
        total_out += result.usage.output_tokens
    with open(out / "rejections.tsv", "w", encoding="utf-8") as fh:
        for name, kind, line in rejections:
            fh.write(f"{name}\t{kind}\t{line}\n")
    usage = Usage(total_in, total_out)
    cost = estimate_cost(usage)
    with open(out / "cost.txt", "w", encoding="utf-8") as fh:
        fh.write(f"input_tokens={total_in}\noutput_tokens={total_out}\n"
                 f"estimated_cost={cost:.6f}\n")


def stage_rank(kg: KnowledgeGraph, cfg: PipelineConfig) -> None:
    candidate_dir = Path(cfg.out_dir) / CANDIDATE_DIR
    out = Path(cfg.out_dir) / RANKED_DIR
    out.mkdir(parents=True, exist_ok=True)
    vocab = kg.vocab()
    for path in sorted(candidate_dir.glob("*.rules.txt")):
        rid = parse_relation_file(path)
        name = kg.relations.name(rid)
        try:
            rules = []
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        rules.append(parse_rule(line, vocab, cfg.max_len,
                                                expected_head=rid))
            ranked = rank_rules(kg, rules, cfg.measure)
            write_ranked_rules(ranked, vocab, relation_file(out, rid, name, "tsv"))
        except Exception as exc:
            raise StageError("rank", name, exc) from exc


def load_ranked_dir(kg: KnowledgeGraph, cfg: PipelineConfig):
    ranked_dir = Path(cfg.out_dir) / RANKED_DIR
    vocab = kg.vocab()
    rules_by_relation = {}
    for path in sorted(ranked_dir.glob("*.tsv")):
        rid = parse_relation_file(path)
        rules_by_relation[rid] = read_ranked_rules(path, vocab, cfg.max_len,
                                                   cfg.measure)
    return rules_by_relation


def stage_eval(kg: KnowledgeGraph, cfg: PipelineConfig) -> list[str]:
    rules_by_relation = load_ranked_dir(kg, cfg)
    report = evaluate(kg, rules_by_relation, n_values=(1, 10),
                      unranked_policy=cfg.unranked_policy)
    out = Path(cfg.out_dir)
    lines = report.to_lines()
    (out / "eval.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "eval_relations.tsv").write_text(
        "\n".join(report.per_relation_table()) + "\n", encoding="utf-8")
    (out / "rule_counts.txt").write_text(
        "\n".join(rule_set_report(kg, rules_by_relation)) + "\n",
        encoding="utf-8")
    return lines


def cmd_ingest(cfg: PipelineConfig) -> int:
    kg = load_dataset(cfg)
    for line in kg.report().to_lines():
        print(line)
    return 0


def cmd_sample(cfg: PipelineConfig) -> int:
    kg = load_dataset(cfg)
    written = stage_sample(kg, cfg)
    write_manifest(cfg)
    print(f"wrote {written} sample files")
    return 0


def cmd_generate(cfg: PipelineConfig) -> int:
    kg = load_dataset(cfg)
    stage_generate(kg, cfg)
    write_manifest(cfg)
    print("candidate rules written")
    return 0


def cmd_rank(cfg: PipelineConfig) -> int:
    kg = load_dataset(cfg)
    stage_rank(kg, cfg)
    write_manifest(cfg)
    print("ranked rules written")
    return 0


def cmd_eval(cfg: PipelineConfig) -> int:
    kg = load_dataset(cfg)
    lines = stage_eval(kg, cfg)
    write_manifest(cfg)
    for line in lines:
        print(line)
    return 0


def cmd_reason(cfg: PipelineConfig, source: str, relation: str) -> int:
    kg = load_dataset(cfg)
    rules_by_relation = load_ranked_dir(kg, cfg)
    rid = kg.relations.id_of(relation)
    rules = rules_by_relation.get(rid, [])
    if source not in kg.entity_ids:
        print(f"error: unknown entity {source!r}", file=sys.stderr)
        return 1
    result = answer(kg, rules, CompletionQuery(kg.entity_ids[source], rid),
                    top_n=cfg.top_n)
    for entity, score in result.ranked:
        print(f"{kg.entity_names[entity]}\t{float(score):.6f}")
    return 0


def cmd_pipeline(cfg: PipelineConfig) -> int:
    kg = load_dataset(cfg)
    written = stage_sample(kg, cfg)
    if written:
        stage_generate(kg, cfg)
        stage_rank(kg, cfg)
        lines = stage_eval(kg, cfg)
    else:
        lines = []
    write_manifest(cfg)
    for line in lines:
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rulesmith",
        description="Mine, rank, and apply chain rules over a knowledge graph.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--train")
        p.add_argument("--valid")
        p.add_argument("--test")
        p.add_argument("--out", dest="out_dir")
        p.add_argument("--max-len", dest="max_len", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--d", type=int)
        p.add_argument("--seed-count", dest="seed_count", type=int)
        p.add_argument("--per-seed-cap", dest="per_seed_cap", type=int)
        p.add_argument("--rng-seed", dest="rng_seed", type=int)
        p.add_argument("--backend", choices=["echo", "replay", "live"])
        p.add_argument("--replay", dest="replay_path")
        p.add_argument("--measure",
                       choices=["none", "coverage", "confidence", "pca"])
        p.add_argument("--top-n", dest="top_n", type=int)
        p.add_argument("--parallelism", type=int)
        p.add_argument("--model")
        p.add_argument("--endpoint")
        p.add_argument("--temperature", type=float)
        p.add_argument("--unranked-policy", dest="unranked_policy",
                       choices=["midpoint", "worst"])
        return p

    add("ingest", help="load a dataset and print its statistics")
    add("sample", help="sample closed paths into rule-sample files")
    add("generate", help="prompt the backend for candidate rules")
    add("rank", help="score and rank candidate rules")
    reason = add("reason", help="answer one completion query from ranked rules")
    reason.add_argument("--source", required=True)
    reason.add_argument("--relation", required=True)
    add("eval", help="evaluate ranked rules on the test split")
    add("pipeline", help="run sample, generate, rank, and eval in order")
    return parser


_CONFIG_KEYS = ("train", "valid", "test", "out_dir", "max_len", "k", "d",
                "seed_count", "per_seed_cap", "rng_seed", "backend",
                "replay_path", "measure", "top_n", "parallelism", "model",
                "endpoint", "temperature", "unranked_policy")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
        cfg = load_config(args.config, overrides)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "rank":
            return cmd_rank(cfg)
        if args.command == "reason":
            return cmd_reason(cfg, args.source, args.relation)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "pipeline":
            return cmd_pipeline(cfg)
        raise AssertionError(f"unhandled command {args.command}")
    except AuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, KGLoadError, RuleParseError, StageError,
            TransportError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
