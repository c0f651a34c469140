"""Chain-rule language: the Rule type, its textual grammar, and verbalization.

A rule is a head relation implied by an ordered body chain:

    head(X,Y) <- r1(X,Z_1) & r2(Z_1,Y)

Variables must form the linear chain X, Z_1, ..., Z_{n-1}, Y; only the
relation sequence is stored. The parser is total over arbitrary text: every
input yields a Rule or one of the error classes below, which is what lets
model output be filtered line by line without babysitting.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .kg import INV_PREFIX


class RuleParseError(ValueError):
    """Base class; carries the offending line for rejection reports."""

    def __init__(self, message: str, line: str = ""):
        super().__init__(message)
        self.line = line


class GrammarError(RuleParseError):
    pass


class VocabularyError(RuleParseError):
    """Unknown predicate: the out-of-vocabulary hallucination filter."""


class ChainError(RuleParseError):
    """Variables do not form the X -> ... -> Y chain."""


class LengthError(RuleParseError):
    pass


class HeadMismatchError(RuleParseError):
    """Head relation differs from the queried target."""


@dataclass(frozen=True)
class Rule:
    head: int
    body: tuple[int, ...]

    def __post_init__(self):
        if not self.body:
            raise GrammarError("rule body must not be empty")


def verbalize(name: str) -> str:
    """Display form of a relation name: separators become single spaces.

    The inverse marker prefix is kept verbatim so the direction of travel
    stays visible in prompts and generated text.
    """
    if name.startswith(INV_PREFIX):
        return INV_PREFIX + verbalize(name[len(INV_PREFIX):])
    return re.sub(r"[_/\s]+", " ", name).strip()


def match_key(name: str) -> str:
    """Case-insensitive lookup key shared by raw and verbalized spellings."""
    low = name.strip()
    if low.lower().startswith(INV_PREFIX):
        return INV_PREFIX + match_key(low[len(INV_PREFIX):])
    return re.sub(r"[_/\s]+", " ", low).strip().lower()


class RelationVocab:
    """Name table for parsing and printing; rejects verbalization collisions."""

    def __init__(self, names: list[str]):
        self.names = list(names)
        self._by_key: dict[str, int] = {}
        for i, n in enumerate(self.names):
            key = match_key(n)
            if key in self._by_key:
                raise ValueError(
                    f"relation names collide after normalization: "
                    f"{self.names[self._by_key[key]]!r} vs {n!r}")
            self._by_key[key] = i

    def __len__(self) -> int:
        return len(self.names)

    def name(self, r: int) -> str:
        return self.names[r]

    def match(self, text: str) -> int:
        key = match_key(text)
        if key not in self._by_key:
            raise VocabularyError(f"unknown relation {text!r}")
        return self._by_key[key]


_ATOM_RE = re.compile(r"^\s*(?P<name>[^()]*?)\s*\(\s*(?P<a>[^(),\s]+)\s*,"
                      r"\s*(?P<b>[^(),\s]+)\s*\)\s*$")
_IMPLICATION_RE = re.compile(r"<-|←")
_CONJUNCTION_RE = re.compile(r"&|∧")


def _parse_atom(text: str, line: str) -> tuple[str, str, str]:
    m = _ATOM_RE.match(text)
    if not m or not m.group("name").strip():
        raise GrammarError(f"malformed atom {text!r}", line)
    return m.group("name").strip(), m.group("a"), m.group("b")


def parse_rule(text: str, vocab: RelationVocab, max_len: int = 3,
               expected_head: int | None = None) -> Rule:
    """Parse one rule line against the vocabulary.

    Accepts "<-" or the arrow glyph, "&" or the wedge glyph, arbitrary
    whitespace, and permissive variable spellings as long as the atoms chain
    from X to Y with pairwise-distinct intermediates.
    """
    line = text.strip()
    try:
        return _parse_rule_line(line, vocab, max_len, expected_head)
    except RuleParseError as err:
        if not err.line:
            err.line = line
        raise


def _parse_rule_line(line: str, vocab: RelationVocab, max_len: int,
                     expected_head: int | None) -> Rule:
    split = _IMPLICATION_RE.split(line, maxsplit=1)
    if len(split) != 2:
        raise GrammarError("missing implication token", line)
    head_text, body_text = split
    head_name, hx, hy = _parse_atom(head_text, line)
    head = vocab.match(head_name)
    if expected_head is not None and head != expected_head:
        raise HeadMismatchError(
            f"head {head_name!r} is not the queried relation "
            f"{vocab.name(expected_head)!r}", line)
    if hx.lower() == hy.lower():
        raise ChainError("head variables must be distinct", line)

    atom_texts = _CONJUNCTION_RE.split(body_text)
    if not body_text.strip():
        raise GrammarError("empty rule body", line)
    atoms = [_parse_atom(a, line) for a in atom_texts]
    if len(atoms) > max_len:
        raise LengthError(f"body length {len(atoms)} exceeds {max_len}", line)

    body = tuple(vocab.match(name) for name, _, _ in atoms)
    # Chain shape: first var X, last var Y, adjacent atoms share a variable,
    # intermediates pairwise distinct and different from the endpoints.
    seq = [atoms[0][1]] + [a[2] for a in atoms]
    for i in range(1, len(atoms)):
        if atoms[i][1].lower() != seq[i].lower():
            raise ChainError(
                f"atom {i + 1} starts at {atoms[i][1]!r}, expected {seq[i]!r}", line)
    low = [v.lower() for v in seq]
    if low[0] != hx.lower() or low[-1] != hy.lower():
        raise ChainError("body endpoints do not match the head variables", line)
    inner = low[1:-1]
    if len(set(inner)) != len(inner) or any(v in (low[0], low[-1]) for v in inner):
        raise ChainError("intermediate variables must be pairwise distinct", line)
    return Rule(head, body)


def print_rule(rule: Rule, vocab: RelationVocab, verbalized: bool = False) -> str:
    """Canonical text form; parse_rule(print_rule(r)) == r.

    With verbalized=True relation names are rendered in display form; the
    parser still maps them back through the shared normalization.
    """
    show = (lambda r: verbalize(vocab.name(r))) if verbalized else vocab.name
    n = len(rule.body)
    variables = ["X"] + [f"Z_{i}" for i in range(1, n)] + ["Y"]
    body = " & ".join(
        f"{show(r)}({variables[i]},{variables[i + 1]})"
        for i, r in enumerate(rule.body))
    return f"{show(rule.head)}(X,Y) <- {body}"


def extract_rule_lines(response: str) -> list[str]:
    """Candidate rule lines from model output: any line with an implication.

    Surrounding prose is dropped here; bad candidates are rejected later by
    the parser with a classified error.
    """
    return [ln.strip() for ln in response.splitlines()
            if _IMPLICATION_RE.search(ln)]
