"""Rule mining over knowledge graphs with LLM-proposed chain rules.

Pipeline stages: load a triple store with inverse augmentation, sample
closed paths as rule evidence, prompt a chat model for candidate rules,
rank candidates by grounded quality measures, and apply the survivors to
link-prediction queries.
"""

from .kg import KnowledgeGraph, from_triples, load_kg
from .rules import Rule, RelationVocab, parse_rule, print_rule
from .sampler import sample_closed_paths, abstract_to_samples
from .ranker import rank_rules, score_rule
from .reasoner import CompletionQuery, answer
from .generator import GenerationConfig, generate

__all__ = [
    "KnowledgeGraph", "from_triples", "load_kg",
    "Rule", "RelationVocab", "parse_rule", "print_rule",
    "sample_closed_paths", "abstract_to_samples",
    "rank_rules", "score_rule",
    "CompletionQuery", "answer",
    "GenerationConfig", "generate",
]

__version__ = "0.1.0"
