"""Prompted rule generation: batch samples into queries, call a chat backend.

Three interchangeable backends sit behind one call shape: a live
OpenAI-style chat-completions endpoint, a replay backend that serves
recorded responses from a fixture file, and an echo backend that simply
returns the sampled rules (the offline stand-in used in end-to-end tests).
"""

from __future__ import annotations

import base64
import hashlib
import logging
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .kg import KnowledgeGraph
from .rules import (Rule, RelationVocab, RuleParseError, extract_rule_lines,
                    parse_rule, print_rule, verbalize)
from .sampler import RuleSample, abstract_to_samples, derive_seed, sample_closed_paths

log = logging.getLogger(__name__)

API_KEY_ENV = "RULESMITH_API_KEY"

PROMPT_TEMPLATE = (
    "Logical rules define the relationship between two entities: X and Y. "
    "Each rule is written in the form of a logical implication, which states "
    "that if the conditions on the right-hand side (rule body) are satisfied, "
    "then the statement on the left-hand side (rule head) holds true.\n"
    "\n"
    "Now we have the following rules:\n"
    "{samples}\n"
    "\n"
    "Based on the above rules, please generate as many of the most important "
    "rules for the rule head: \"{head}(X,Y)\" as possible. Please only select "
    "predicates form: {relations}. Return the rules only without any "
    "explanations."
)


class TransportError(RuntimeError):
    pass


class AuthError(RuntimeError):
    pass


@dataclass
class GenerationConfig:
    k: int = 50
    d: int = 10
    max_len: int = 3
    model: str = "gpt-3.5-turbo-0613"
    endpoint: str = "https://api.openai.com/v1"
    temperature: float = 0.0
    max_retries: int = 3
    rng_seed: int = 0
    backend: str = "echo"
    replay_path: str | None = None
    seed_count: int = 50
    per_seed_cap: int = 100
    parallelism: int = 1
    min_request_interval: float = 0.0
    backoff_base: float = 1.0
    input_rate: float = 0.001
    output_rate: float = 0.002

    def __post_init__(self):
        if self.k < 1 or self.d < 1 or self.max_len < 1:
            raise ValueError("k, d, and max_len must all be >= 1")


@dataclass
class PromptBatch:
    target: int
    queries: list[str]
    sample_ids: list[list[int]]


@dataclass
class Usage:
    input_tokens: int = 0
    output_tokens: int = 0

    def add(self, other: "Usage") -> None:
        self.input_tokens += other.input_tokens
        self.output_tokens += other.output_tokens


@dataclass
class CandidateRuleSet:
    target: int
    rules: list[Rule] = field(default_factory=list)
    rejected: list[tuple[str, str]] = field(default_factory=list)
    usage: Usage = field(default_factory=Usage)
    failed_queries: list[int] = field(default_factory=list)


def estimate_cost(usage: Usage, input_rate: float = 0.001,
                  output_rate: float = 0.002) -> float:
    """Dollar cost at per-1000-token rates."""
    return (usage.input_tokens / 1000.0) * input_rate \
        + (usage.output_tokens / 1000.0) * output_rate


def _estimate_tokens(text: str) -> int:
    # rough chars-per-token heuristic for offline backends
    return max(1, len(text) // 4)


@dataclass
class BackendResponse:
    text: str
    input_tokens: int
    output_tokens: int


class EchoBackend:
    """Answers with the rule lines already present in the prompt."""

    def complete(self, prompt: str) -> BackendResponse:
        text = "\n".join(extract_rule_lines(prompt))
        return BackendResponse(text, _estimate_tokens(prompt),
                               _estimate_tokens(text))


def prompt_fingerprint(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ReplayBackend:
    """Serves responses recorded as sha256(prompt)<TAB>base64(response) lines."""

    def __init__(self, fixture_path: str | Path):
        self._responses: dict[str, str] = {}
        with open(fixture_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                digest, _, payload = line.partition("\t")
                self._responses[digest] = base64.b64decode(payload).decode("utf-8")

    def complete(self, prompt: str) -> BackendResponse:
        digest = prompt_fingerprint(prompt)
        if digest not in self._responses:
            raise TransportError(f"no recorded response for query {digest[:12]}")
        text = self._responses[digest]
        return BackendResponse(text, _estimate_tokens(prompt),
                               _estimate_tokens(text))


def record_replay_line(prompt: str, response: str) -> str:
    payload = base64.b64encode(response.encode("utf-8")).decode("ascii")
    return f"{prompt_fingerprint(prompt)}\t{payload}"


class LiveBackend:
    """OpenAI-compatible chat completions over HTTP with retry and pacing."""

    RETRYABLE = {429, 500, 502, 503, 504}

    def __init__(self, endpoint: str, model: str, temperature: float,
                 max_retries: int = 3, min_request_interval: float = 0.0,
                 backoff_base: float = 1.0, api_key: str | None = None,
                 timeout: float = 120.0):
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        if not key:
            raise AuthError(f"no API key: set {API_KEY_ENV}")
        self._url = endpoint.rstrip("/") + "/chat/completions"
        self._model = model
        self._temperature = temperature
        self._max_retries = max_retries
        self._interval = min_request_interval
        self._backoff_base = backoff_base
        self._timeout = timeout
        self._headers = {"Authorization": f"Bearer {key}",
                         "Content-Type": "application/json"}
        self._lock = threading.Lock()
        self._next_slot = 0.0

    def _pace(self) -> None:
        if self._interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._next_slot - now
            self._next_slot = max(now, self._next_slot) + self._interval
        if wait > 0:
            time.sleep(wait)

    def complete(self, prompt: str) -> BackendResponse:
        body = {
            "model": self._model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self._temperature,
        }
        last_error = "no attempt made"
        for attempt in range(self._max_retries + 1):
            if attempt:
                time.sleep(self._backoff_base * 2 ** (attempt - 1))
            self._pace()
            try:
                resp = requests.post(self._url, json=body, headers=self._headers,
                                     timeout=self._timeout)
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"authentication rejected ({resp.status_code})")
            if resp.status_code in self.RETRYABLE:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            payload = resp.json()
            text = payload["choices"][0]["message"]["content"]
            usage = payload.get("usage", {})
            return BackendResponse(
                text,
                int(usage.get("prompt_tokens", _estimate_tokens(prompt))),
                int(usage.get("completion_tokens", _estimate_tokens(text))),
            )
        raise TransportError(f"gave up after {self._max_retries + 1} attempts: "
                             f"{last_error}")


def make_backend(config: GenerationConfig):
    if config.backend == "echo":
        return EchoBackend()
    if config.backend == "replay":
        if not config.replay_path:
            raise ValueError("replay backend needs replay_path")
        return ReplayBackend(config.replay_path)
    if config.backend == "live":
        return LiveBackend(config.endpoint, config.model, config.temperature,
                           config.max_retries, config.min_request_interval,
                           config.backoff_base)
    raise ValueError(f"unknown backend {config.backend!r}")


def relation_listing(vocab: RelationVocab) -> str:
    """The predicate whitelist embedded in every prompt: verbalized, sorted."""
    return ", ".join(sorted(verbalize(n) for n in vocab.names))


def build_prompt(target: int, samples: list[RuleSample],
                 vocab: RelationVocab) -> str:
    """Instantiate the generation prompt for one target relation."""
    if not samples:
        raise ValueError("need at least one rule sample")
    for s in samples:
        if s.rule.head != target:
            raise ValueError("sample head does not match the target relation")
    lines = "\n".join(print_rule(s.rule, vocab, verbalized=True) for s in samples)
    return PROMPT_TEMPLATE.format(samples=lines,
                                  head=verbalize(vocab.name(target)),
                                  relations=relation_listing(vocab))


def build_batch(target: int, samples: list[RuleSample], config: GenerationConfig,
                vocab: RelationVocab) -> PromptBatch:
    """d prompts of up to k samples each, drawn independently per query."""
    rng = random.Random(derive_seed(config.rng_seed, "gen:" + vocab.name(target)))
    queries, ids = [], []
    take = min(config.k, len(samples))
    for _ in range(config.d):
        picked = sorted(rng.sample(range(len(samples)), take))
        ids.append(picked)
        queries.append(build_prompt(target, [samples[i] for i in picked], vocab))
    return PromptBatch(target, queries, ids)


def generate(kg: KnowledgeGraph, target: int, config: GenerationConfig,
             samples: list[RuleSample] | None = None,
             backend=None) -> CandidateRuleSet:
    """Run the d-query generation round for one target relation.

    Per-query transport failures are recorded and the rest of the batch is
    kept; only a fully failed batch raises. Responses are parsed line by
    line, rejects keep their error class, and the surviving rules are
    deduplicated and ordered by canonical text so arrival order is
    irrelevant.
    """
    vocab = kg.vocab()
    if samples is None:
        paths = sample_closed_paths(kg, target, config.max_len, config.seed_count,
                                    config.rng_seed, config.per_seed_cap)
        samples = abstract_to_samples(paths)
    result = CandidateRuleSet(target=target)
    if not samples:
        log.info("no samples for %s; nothing to generate", vocab.name(target))
        return result
    if backend is None:
        backend = make_backend(config)
    batch = build_batch(target, samples, config, vocab)

    def run_query(prompt: str) -> BackendResponse:
        return backend.complete(prompt)

    responses: list[BackendResponse | None] = [None] * len(batch.queries)
    errors: list[TransportError | None] = [None] * len(batch.queries)
    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            futures = [pool.submit(run_query, q) for q in batch.queries]
            for i, fut in enumerate(futures):
                try:
                    responses[i] = fut.result()
                except TransportError as exc:
                    errors[i] = exc
    else:
        for i, q in enumerate(batch.queries):
            try:
                responses[i] = run_query(q)
            except TransportError as exc:
                errors[i] = exc

    seen: dict[str, Rule] = {}
    for i, resp in enumerate(responses):
        if resp is None:
            result.failed_queries.append(i)
            log.warning("query %d failed: %s", i, errors[i])
            continue
        result.usage.add(Usage(resp.input_tokens, resp.output_tokens))
        parsed_any = False
        for line in extract_rule_lines(resp.text):
            try:
                rule = parse_rule(line, vocab, max_len=config.max_len,
                                  expected_head=target)
            except RuleParseError as exc:
                result.rejected.append((line, type(exc).__name__))
                continue
            parsed_any = True
            seen.setdefault(print_rule(rule, vocab), rule)
        if not parsed_any:
            log.info("query %d produced no parseable rules", i)
    if result.failed_queries and len(result.failed_queries) == len(batch.queries):
        raise TransportError(
            f"all {len(batch.queries)} queries failed; last: "
            f"{errors[result.failed_queries[-1]]}")
    result.rules = [seen[k] for k in sorted(seen)]
    return result
