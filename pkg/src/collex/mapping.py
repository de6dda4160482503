"""Two-channel concept mapping: embedding cosine + normalized Levenshtein.

Both channels run an exact argmax over every inventory name. The lexical
scan prunes with a length-difference bound (a pair whose lengths already
cap its similarity below the current best is skipped); the semantic scan is
one matrix-vector product over unit vectors. Ties break toward the smaller
concept_id so results are reproducible.
"""

from __future__ import annotations

import hashlib
import logging
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateVectorError,
    InsufficientDataError,
    InventoryError,
    MissingEmbeddingError,
)
from .tsvio import escape_field, read_rows, unescape_field, write_rows

log = logging.getLogger(__name__)

SEMANTIC = "semantic"
LEXICAL = "lexical"
BOTH = "both"

UNIT_TOLERANCE = 1e-6


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over Unicode scalar values."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        append = cur.append
        for j, cb in enumerate(b, 1):
            if ca == cb:
                append(prev[j - 1])
            else:
                append(1 + min(prev[j - 1], prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def fuzzy_similarity(a: str, b: str) -> float:
    """1 - distance / max-length, and 1.0 when both strings are empty."""
    m = max(len(a), len(b))
    if m == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / m


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("cosine undefined for zero-norm vector")
    return float(np.dot(u, v)) / (nu * nv)


@dataclass(frozen=True)
class Concept:
    concept_id: str
    preferred_name: str
    synonyms: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.concept_id or not self.preferred_name:
            raise ValueError("concept_id and preferred_name must be non-empty")
        if any(not s for s in self.synonyms):
            raise ValueError(f"empty synonym for {self.concept_id}")

    def names(self) -> tuple[str, ...]:
        return (self.preferred_name,) + self.synonyms


INVENTORY_COLUMNS = ["concept_id", "name", "is_preferred"]


class ConceptInventory:
    """Canonical concept list with a name -> concept_id index."""

    def __init__(self, concepts: Iterable[Concept]):
        self.concepts = sorted(concepts, key=lambda c: c.concept_id)
        self.by_id: dict[str, Concept] = {}
        self.name_index: dict[str, str] = {}
        for c in self.concepts:
            if c.concept_id in self.by_id:
                raise InventoryError(f"duplicate concept_id {c.concept_id!r}")
            self.by_id[c.concept_id] = c
        for c in self.concepts:
            for name in c.names():
                owner = self.name_index.get(name)
                if owner is not None and owner != c.concept_id:
                    raise InventoryError(
                        f"name {name!r} claimed by both {owner} and {c.concept_id}"
                    )
                self.name_index[name] = c.concept_id

    def __len__(self) -> int:
        return len(self.concepts)

    def all_names(self) -> list[tuple[str, str]]:
        """(concept_id, name) pairs in (concept_id, name) order."""
        out = []
        for c in self.concepts:
            for name in sorted(set(c.names())):
                out.append((c.concept_id, name))
        return out

    @classmethod
    def load(cls, path: str | Path) -> "ConceptInventory":
        preferred: dict[str, str] = {}
        synonyms: dict[str, list[str]] = {}
        for fields in read_rows(path, expect_header=INVENTORY_COLUMNS):
            cid, name_raw, is_pref = fields
            name = unescape_field(name_raw)
            if is_pref.strip() == "1":
                if cid in preferred and preferred[cid] != name:
                    raise InventoryError(f"two preferred names for {cid}")
                preferred[cid] = name
            else:
                synonyms.setdefault(cid, []).append(name)
        concepts = []
        for cid, pname in preferred.items():
            syns = tuple(s for s in synonyms.pop(cid, []) if s != pname)
            concepts.append(Concept(cid, pname, syns))
        if synonyms:
            raise InventoryError(
                f"concepts with synonyms but no preferred name: {sorted(synonyms)}"
            )
        return cls(concepts)

    def save(self, path: str | Path) -> None:
        rows = []
        for c in self.concepts:
            rows.append([c.concept_id, escape_field(c.preferred_name), "1"])
            for syn in sorted(set(c.synonyms)):
                rows.append([c.concept_id, escape_field(syn), "0"])
        write_rows(path, INVENTORY_COLUMNS, rows)


class TrigramEmbedder:
    """Deterministic character-trigram hashing embedder.

    A stand-in for a real medical-term encoder: adequate for tests and for
    filling store gaps, not a substitute for a trained model. Vectors are
    unit-normalized and stable across processes (crc32, not hash()).
    """

    def __init__(self, dimension: int):
        if dimension < 2:
            raise ValueError("dimension must be >= 2")
        self.dimension = dimension

    def __call__(self, term: str) -> np.ndarray:
        padded = f" {term.lower()} "
        vec = np.zeros(self.dimension, dtype=np.float64)
        for i in range(len(padded) - 2):
            h = zlib.crc32(padded[i : i + 3].encode("utf-8"))
            vec[h % self.dimension] += 1.0 if (h >> 16) & 1 else -1.0
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec[0] = 1.0
            return vec
        return vec / norm


class EmbeddingStore:
    """Term -> unit vector map with an optional fallback embedder."""

    def __init__(self, dimension: int, embedder: Callable[[str], np.ndarray] | None = None):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self.vectors: dict[str, np.ndarray] = {}
        self.embedder = embedder

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, term: str) -> bool:
        return term in self.vectors

    def add(self, term: str, vector: Sequence[float]) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.shape != (self.dimension,):
            raise ValueError(
                f"vector for {term!r} has shape {vec.shape}, want ({self.dimension},)"
            )
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise DegenerateVectorError(f"zero vector for term {term!r}")
        if abs(norm - 1.0) > UNIT_TOLERANCE:
            vec = vec / norm
        self.vectors[term] = vec

    def vector(self, term: str) -> np.ndarray:
        vec = self.vectors.get(term)
        if vec is not None:
            return vec
        if self.embedder is not None:
            vec = np.asarray(self.embedder(term), dtype=np.float64)
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                raise DegenerateVectorError(f"embedder returned zero vector for {term!r}")
            vec = vec / norm
            self.vectors[term] = vec
            return vec
        raise MissingEmbeddingError([term])

    def require(self, terms: Iterable[str]) -> None:
        if self.embedder is not None:
            return
        missing = [t for t in terms if t not in self.vectors]
        if missing:
            raise MissingEmbeddingError(missing)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"dim {self.dimension}\n")
            for term in sorted(self.vectors):
                nums = " ".join(repr(x) for x in self.vectors[term].tolist())
                fh.write(f"{escape_field(term)}\t{nums}\n")

    @classmethod
    def load(cls, path: str | Path, embedder: Callable[[str], np.ndarray] | None = None
             ) -> "EmbeddingStore":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split()
            if len(header) != 2 or header[0] != "dim":
                raise ValueError(f"embedding store must start with 'dim <d>': {path}")
            store = cls(int(header[1]), embedder=embedder)
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                term_raw, nums = line.split("\t", 1)
                store.add(unescape_field(term_raw), [float(x) for x in nums.split()])
        return store


@dataclass(frozen=True)
class MappingCandidate:
    lemma: str
    concept_id: str
    score: float
    channel: str

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0,1]")
        if self.channel not in (SEMANTIC, LEXICAL, BOTH):
            raise ValueError(f"unknown channel {self.channel!r}")


@dataclass(frozen=True)
class ThresholdConfig:
    tau_semantic: float = 0.8
    tau_lexical: float = 0.8

    def __post_init__(self):
        for name, v in (("tau_semantic", self.tau_semantic), ("tau_lexical", self.tau_lexical)):
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must be in [0,1], got {v}")


class SemanticIndex:
    """Cached name-vector matrix for one (inventory, store) pair."""

    def __init__(self, inventory: ConceptInventory, store: EmbeddingStore):
        names = inventory.all_names()
        store.require(name for _, name in names)
        self.concept_ids = [cid for cid, _ in names]
        self.matrix = np.stack([store.vector(name) for _, name in names])
        self.store = store

    def top1(self, lemma: str) -> tuple[str, float]:
        scores = self.matrix @ self.store.vector(lemma)
        # rows are sorted by concept_id, so the first argmax is the tie winner
        idx = int(np.argmax(scores))
        return self.concept_ids[idx], max(0.0, min(1.0, float(scores[idx])))


def semantic_top1(
    lemma: str,
    inventory: ConceptInventory,
    store: EmbeddingStore,
    index: SemanticIndex | None = None,
) -> MappingCandidate:
    """Concept whose best name maximizes cosine with the lemma embedding."""
    if index is None:
        index = SemanticIndex(inventory, store)
    cid, score = index.top1(lemma)
    return MappingCandidate(lemma, cid, score, SEMANTIC)


def lexical_top1(lemma: str, inventory: ConceptInventory) -> MappingCandidate:
    """Concept whose best name maximizes normalized Levenshtein similarity."""
    if not len(inventory):
        raise InventoryError("inventory is empty")
    best_cid: str | None = None
    best_score = -1.0
    la = len(lemma)
    for cid, name in inventory.all_names():
        m = max(la, len(name))
        if m:
            # length difference alone bounds the similarity; equal-bound
            # names can only tie, and ties keep the earlier concept_id
            bound = 1.0 - abs(la - len(name)) / m
            if bound <= best_score:
                continue
        score = fuzzy_similarity(lemma, name)
        if score > best_score:
            best_score = score
            best_cid = cid
    return MappingCandidate(lemma, best_cid, max(0.0, best_score), LEXICAL)


def ensemble_map(
    lemma: str,
    inventory: ConceptInventory,
    store: EmbeddingStore,
    cfg: ThresholdConfig = ThresholdConfig(),
    index: SemanticIndex | None = None,
) -> list[MappingCandidate]:
    """Merged channel proposals for one lemma (0, 1, or 2 candidates)."""
    sem = semantic_top1(lemma, inventory, store, index=index)
    lex = lexical_top1(lemma, inventory)
    sem_ok = sem.score >= cfg.tau_semantic
    lex_ok = lex.score >= cfg.tau_lexical
    if sem_ok and lex_ok:
        if sem.concept_id == lex.concept_id:
            return [MappingCandidate(lemma, sem.concept_id, max(sem.score, lex.score), BOTH)]
        return [sem, lex]
    if sem_ok:
        return [sem]
    if lex_ok:
        return [lex]
    return []


def channel_scores(
    lemmas: Sequence[str],
    inventory: ConceptInventory,
    store: EmbeddingStore,
) -> dict[str, dict[str, float]]:
    """Top-1 score per channel per lemma, computed once for sweeping."""
    index = SemanticIndex(inventory, store)
    out = {SEMANTIC: {}, LEXICAL: {}}
    for lemma in lemmas:
        out[SEMANTIC][lemma] = semantic_top1(lemma, inventory, store, index=index).score
        out[LEXICAL][lemma] = lexical_top1(lemma, inventory).score
    return out


def threshold_sweep(
    lemmas: Sequence[str],
    inventory: ConceptInventory,
    store: EmbeddingStore,
    taus: Sequence[float],
) -> dict[str, dict[float, int]]:
    """Per channel: how many lemmas keep their top-1 candidate at each tau."""
    taus = list(taus)
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ConfigurationError("taus must be sorted ascending")
    scores = channel_scores(lemmas, inventory, store)
    sweep: dict[str, dict[float, int]] = {}
    for channel, per_lemma in scores.items():
        vals = sorted(per_lemma.values())
        counts = {}
        for tau in taus:
            # count of scores >= tau via binary search on the sorted values
            lo, hi = 0, len(vals)
            while lo < hi:
                mid = (lo + hi) // 2
                if vals[mid] < tau:
                    lo = mid + 1
                else:
                    hi = mid
            counts[tau] = len(vals) - lo
        sweep[channel] = counts
    return sweep


def elbow(sweep: dict[float, int]) -> float:
    """Tau where the forward second difference of counts is maximal.

    The winner is the last gentle point before the sharpest drop; ties
    resolve to the larger tau.
    """
    taus = sorted(sweep)
    if len(taus) < 3:
        raise InsufficientDataError("elbow needs at least 3 sweep points")
    steps = [b - a for a, b in zip(taus, taus[1:])]
    if max(steps) - min(steps) > 1e-9:
        raise ConfigurationError("elbow requires a uniform tau grid")
    counts = [sweep[t] for t in taus]
    best_tau = taus[0]
    best_dd = -float("inf")
    for i in range(len(taus) - 2):
        dd = counts[i] - 2 * counts[i + 1] + counts[i + 2]
        if dd >= best_dd:
            best_dd = dd
            best_tau = taus[i]
    return best_tau


CANDIDATE_COLUMNS = ["lemma", "concept_id", "concept_name", "score", "channel", "round"]


def save_candidates(
    path: str | Path,
    candidates: Iterable[MappingCandidate],
    inventory: ConceptInventory,
    round_no: int,
) -> None:
    rows = []
    for c in sorted(candidates, key=lambda c: (c.lemma, c.concept_id)):
        rows.append(
            [
                escape_field(c.lemma),
                c.concept_id,
                escape_field(inventory.by_id[c.concept_id].preferred_name),
                f"{c.score:.6f}",
                c.channel,
                str(round_no),
            ]
        )
    write_rows(path, CANDIDATE_COLUMNS, rows)


def load_candidates(path: str | Path) -> list[tuple[MappingCandidate, int]]:
    out = []
    for fields in read_rows(path, expect_header=CANDIDATE_COLUMNS):
        lemma_raw, cid, _name, score, channel, round_no = fields
        out.append(
            (
                MappingCandidate(unescape_field(lemma_raw), cid, float(score), channel),
                int(round_no),
            )
        )
    return out
