"""Triple store: name interning, inverse-edge augmentation, train adjacency indexes.

The graph is immutable once built. Train facts are held per relation as
head-sorted numpy arrays so that successor lookups are two binary searches
and relational joins stay vectorized; valid/test splits are kept only for
query construction and filtered evaluation, never for grounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

INV_PREFIX = "inv_"


class KGLoadError(ValueError):
    """Problem with an input triple file."""


class MalformedLineError(KGLoadError):
    pass


class ReservedPrefixError(KGLoadError):
    """Raw input used the inverse-relation name prefix."""


class RelationTable:
    """Dense relation ids: forward relations first, their inverses after.

    inverse(inverse(r)) == r holds structurally: the inverse of id r is
    r +/- n_forward.
    """

    def __init__(self, forward_names: list[str]):
        self.n_forward = len(forward_names)
        self.names = list(forward_names) + [INV_PREFIX + n for n in forward_names]
        self._ids = {n: i for i, n in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    def name(self, r: int) -> str:
        return self.names[r]

    def id_of(self, name: str) -> int:
        return self._ids[name]

    def is_inverse(self, r: int) -> bool:
        return r >= self.n_forward

    def inverse(self, r: int) -> int:
        return r - self.n_forward if r >= self.n_forward else r + self.n_forward

    def base(self, r: int) -> int:
        return r - self.n_forward if r >= self.n_forward else r

    def forward_ids(self) -> range:
        return range(self.n_forward)

    def all_ids(self) -> range:
        return range(len(self.names))


@dataclass
class LoadReport:
    entities: int
    forward_relations: int
    total_relations: int
    train_forward: int
    train_directed: int
    valid_forward: int
    test_forward: int
    duplicates_dropped: int

    @property
    def total_forward(self) -> int:
        return self.train_forward + self.valid_forward + self.test_forward

    @property
    def total_directed(self) -> int:
        return 2 * self.total_forward

    def to_lines(self) -> list[str]:
        lines = [f"{k}={v}" for k, v in vars(self).items()]
        lines.append(f"total_forward={self.total_forward}")
        lines.append(f"total_directed={self.total_directed}")
        return lines


def _dedup_keep_order(rows: np.ndarray, n_rel: int, n_ent: int) -> tuple[np.ndarray, int]:
    """Drop duplicate (h, r, t) rows, keeping first occurrences in input order."""
    if len(rows) == 0:
        return rows, 0
    keys = (rows[:, 0].astype(np.int64) * n_rel + rows[:, 1]) * n_ent + rows[:, 2]
    _, first = np.unique(keys, return_index=True)
    dropped = len(rows) - len(first)
    return rows[np.sort(first)], dropped


class KnowledgeGraph:
    """Interned, augmented graph with per-relation sorted adjacency arrays."""

    def __init__(self, entity_names: list[str], relations: RelationTable,
                 train: np.ndarray, valid: np.ndarray, test: np.ndarray,
                 duplicates_dropped: int = 0):
        self.entity_names = entity_names
        self.entity_ids = {n: i for i, n in enumerate(entity_names)}
        self.relations = relations
        # forward triples per split, insertion order, shape (n, 3) int32
        self._train_raw = train
        self._valid_raw = valid
        self._test_raw = test
        self._duplicates_dropped = duplicates_dropped
        self._build_indexes()
        self._pair_keys_cache: dict[int, np.ndarray] = {}
        self._heads_with_fact_cache: dict[int, np.ndarray] = {}
        self._known_keys_cache: dict[int, np.ndarray] = {}
        self._vocab = None
        self.vocab()  # fail at load time if verbalized names collide

    # -- construction ------------------------------------------------------

    def _build_indexes(self) -> None:
        nf = self.relations.n_forward
        fwd = self._train_raw
        if len(fwd):
            inv = np.empty_like(fwd)
            inv[:, 0] = fwd[:, 2]
            inv[:, 1] = fwd[:, 1] + nf
            inv[:, 2] = fwd[:, 0]
            directed = np.concatenate([fwd, inv])
        else:
            directed = fwd.reshape(0, 3)
        order = np.lexsort((directed[:, 2], directed[:, 0], directed[:, 1]))
        directed = directed[order]
        self._heads: list[np.ndarray] = []
        self._tails: list[np.ndarray] = []
        bounds = np.searchsorted(directed[:, 1], np.arange(len(self.relations) + 1))
        for r in self.relations.all_ids():
            block = directed[bounds[r]:bounds[r + 1]]
            self._heads.append(np.ascontiguousarray(block[:, 0]))
            self._tails.append(np.ascontiguousarray(block[:, 2]))

    # -- basic views -------------------------------------------------------

    @property
    def n_entities(self) -> int:
        return len(self.entity_names)

    @property
    def key_base(self) -> int:
        """Multiplier for packing (h, t) into a single int64 key."""
        return max(len(self.entity_names), 1)

    def fact_count(self, r: int) -> int:
        return len(self._heads[r])

    def rel_arrays(self, r: int) -> tuple[np.ndarray, np.ndarray]:
        """Train facts of r as (heads, tails), sorted by head then tail."""
        return self._heads[r], self._tails[r]

    def successors(self, e: int, r: int) -> list[int]:
        """Sorted duplicate-free tails t with (e, r, t) in train facts."""
        return [int(t) for t in self.succ_array(e, r)]

    def succ_array(self, e: int, r: int) -> np.ndarray:
        heads = self._heads[r]
        lo = np.searchsorted(heads, e, "left")
        hi = np.searchsorted(heads, e, "right")
        return self._tails[r][lo:hi]

    def relation_pairs(self, r: int) -> set[tuple[int, int]]:
        """All distinct (head, tail) pairs of r in train facts."""
        return set(zip(map(int, self._heads[r]), map(int, self._tails[r])))

    def pair_keys(self, r: int) -> np.ndarray:
        """Train pairs of r as sorted int64 keys h * n_entities + t."""
        if r not in self._pair_keys_cache:
            keys = self._heads[r].astype(np.int64) * self.key_base + self._tails[r]
            self._pair_keys_cache[r] = keys  # already sorted by construction
        return self._pair_keys_cache[r]

    def heads_with_fact(self, r: int) -> np.ndarray:
        """Boolean mask over entities: has at least one outgoing train fact of r."""
        if r not in self._heads_with_fact_cache:
            mask = np.zeros(self.n_entities, dtype=bool)
            mask[self._heads[r]] = True
            self._heads_with_fact_cache[r] = mask
        return self._heads_with_fact_cache[r]

    def train_triples(self) -> np.ndarray:
        """Forward train triples in insertion order, shape (n, 3)."""
        return self._train_raw

    def split_triples(self, split: str) -> np.ndarray:
        return {"train": self._train_raw, "valid": self._valid_raw,
                "test": self._test_raw}[split]

    def known_pair_keys(self, r: int) -> np.ndarray:
        """Sorted keys of (h, t) pairs of r across train+valid+test.

        For inverse relation ids the forward valid/test triples are reversed;
        this is the filter set for ranking protocols, not a grounding index.
        """
        if r not in self._known_keys_cache:
            nf = self.relations.n_forward
            base, inv = (r, False) if r < nf else (r - nf, True)
            parts = [self.pair_keys(r)]
            for raw in (self._valid_raw, self._test_raw):
                if len(raw) == 0:
                    continue
                rows = raw[raw[:, 1] == base]
                h, t = (rows[:, 2], rows[:, 0]) if inv else (rows[:, 0], rows[:, 2])
                parts.append(h.astype(np.int64) * self.key_base + t)
            keys = np.unique(np.concatenate(parts)) if parts else np.empty(0, np.int64)
            self._known_keys_cache[r] = keys
        return self._known_keys_cache[r]

    def known_answers(self, e: int, r: int) -> list[int]:
        """Entities t with (e, r, t) known in any split; the filter set."""
        keys = self.known_pair_keys(r)
        lo = np.searchsorted(keys, e * self.key_base)
        hi = np.searchsorted(keys, (e + 1) * self.key_base)
        return (keys[lo:hi] % self.key_base).tolist()

    def vocab(self):
        """Relation name table usable by the rule grammar; cached."""
        if self._vocab is None:
            from .rules import RelationVocab

            self._vocab = RelationVocab(self.relations.names)
        return self._vocab

    def report(self) -> LoadReport:
        return LoadReport(
            entities=self.n_entities,
            forward_relations=self.relations.n_forward,
            total_relations=len(self.relations),
            train_forward=len(self._train_raw),
            train_directed=2 * len(self._train_raw),
            valid_forward=len(self._valid_raw),
            test_forward=len(self._test_raw),
            duplicates_dropped=self._duplicates_dropped,
        )

    def export_train(self, path: str | Path) -> None:
        """Write forward train facts as TSV in insertion order."""
        with open(path, "w", encoding="utf-8") as fh:
            for h, r, t in self._train_raw:
                fh.write(f"{self.entity_names[h]}\t{self.relations.name(r)}"
                         f"\t{self.entity_names[t]}\n")


def _read_triple_file(path: str | Path) -> list[tuple[str, str, str]]:
    triples = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise KGLoadError(f"cannot read triple file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedLineError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
            h, r, t = parts
            if not h or not r or not t:
                raise MalformedLineError(f"{path}:{lineno}: empty field")
            if r.startswith(INV_PREFIX):
                raise ReservedPrefixError(
                    f"{path}:{lineno}: relation name uses reserved prefix {INV_PREFIX!r}")
            triples.append((h, r, t))
    return triples


def from_triples(train: list[tuple[str, str, str]],
                 valid: list[tuple[str, str, str]] = (),
                 test: list[tuple[str, str, str]] = ()) -> KnowledgeGraph:
    """Build an augmented graph from name triples (train/valid/test order interning)."""
    for _, r, _ in list(train) + list(valid) + list(test):
        if r.startswith(INV_PREFIX):
            raise ReservedPrefixError(
                f"relation name uses reserved prefix {INV_PREFIX!r}: {r}")
    ent_ids: dict[str, int] = {}
    rel_ids: dict[str, int] = {}

    def intern(table: dict[str, int], name: str) -> int:
        if name not in table:
            table[name] = len(table)
        return table[name]

    arrays = []
    for split in (train, valid, test):
        rows = np.empty((len(split), 3), dtype=np.int32)
        for i, (h, r, t) in enumerate(split):
            rows[i, 0] = intern(ent_ids, h)
            rows[i, 1] = intern(rel_ids, r)
            rows[i, 2] = intern(ent_ids, t)
        arrays.append(rows)

    n_rel, n_ent = max(len(rel_ids), 1), max(len(ent_ids), 1)
    dropped = 0
    for i in range(3):
        arrays[i], d = _dedup_keep_order(arrays[i], n_rel, n_ent)
        dropped += d

    table = RelationTable(sorted(rel_ids, key=rel_ids.get))
    names = sorted(ent_ids, key=ent_ids.get)
    return KnowledgeGraph(names, table, arrays[0], arrays[1], arrays[2], dropped)


def load_kg(train_path: str | Path, valid_path: str | Path | None = None,
            test_path: str | Path | None = None) -> KnowledgeGraph:
    """Load TSV triple files and return the inverse-augmented graph."""
    train = _read_triple_file(train_path)
    valid = _read_triple_file(valid_path) if valid_path else []
    test = _read_triple_file(test_path) if test_path else []
    return from_triples(train, valid, test)
