"""Iterative mapping loop: sampling, exit checks, partitions, triplets,
and the accumulating dictionary.

Each round maps the pending lemmas, persists the candidate pairs, emits a
validation sample, and - once labels arrive - either stops (accuracy below
the exit threshold; remaining lemmas are abandoned) or folds the confirmed
pairs into the dictionary, exports contrastive training triplets, and
carries the rejected lemmas into the next round. Every artifact write is
deterministic under the run seed so reruns are byte-identical.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    AdjudicationIntegrityError,
    AdoptionConflictError,
    EmptyInputError,
    IncompleteRoundError,
    UndefinedAccuracyError,
)
from .mapping import (
    ConceptInventory,
    EmbeddingStore,
    MappingCandidate,
    ThresholdConfig,
    SemanticIndex,
    ensemble_map,
    load_candidates,
    save_candidates,
)
from .normalize import LemmaTable
from .tsvio import escape_field, join_list, read_rows, split_list, unescape_field, write_rows

log = logging.getLogger(__name__)

LABELS_COLUMNS = ["lemma", "concept_id", "final_label"]
DICTIONARY_COLUMNS = ["concept_id", "concept_name", "lemma", "surfaces", "round", "score"]

CONTINUE = "continue"
STOP = "stop"
COMPLETE = "complete"


def sample_for_validation(
    candidates: Sequence[MappingCandidate], n: int = 50, seed: int = 0
) -> list[MappingCandidate]:
    """Uniform sample without replacement, stable under (seed, pair set)."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    if not candidates:
        raise EmptyInputError("no candidates to sample from")
    ordered = sorted(candidates, key=lambda c: (c.lemma, c.concept_id))
    if len(ordered) <= n:
        return ordered
    return random.Random(seed).sample(ordered, n)


@dataclass(frozen=True)
class ExitDecision:
    decision: str
    accuracy: float
    n_correct: int
    n_wrong: int
    n_non_symptom: int


def evaluate_exit(sample_labels: Sequence[int], exit_accuracy: float) -> ExitDecision:
    """Accuracy over label-0/1 pairs; label-2 pairs are removals, not errors."""
    if not sample_labels:
        raise EmptyInputError("empty validation sample")
    n1 = sum(1 for v in sample_labels if v == 1)
    n0 = sum(1 for v in sample_labels if v == 0)
    n2 = sum(1 for v in sample_labels if v == 2)
    if n1 + n0 + n2 != len(sample_labels):
        raise ValueError("labels must be in {0, 1, 2}")
    if n0 + n1 == 0:
        raise UndefinedAccuracyError("every sampled pair was labeled non-symptom")
    accuracy = n1 / (n0 + n1)
    decision = STOP if accuracy < exit_accuracy else CONTINUE
    return ExitDecision(decision, accuracy, n1, n0, n2)


@dataclass
class Partition:
    """Per-concept confirmed-correct (P) and confirmed-wrong (N) lemma sets."""

    positives: dict[str, set[str]] = field(default_factory=dict)
    negatives: dict[str, set[str]] = field(default_factory=dict)

    def validate(self) -> None:
        for cid, pos in self.positives.items():
            overlap = pos & self.negatives.get(cid, set())
            assert not overlap, f"{cid}: lemmas both correct and wrong: {overlap}"

    def concepts(self) -> list[str]:
        return sorted(set(self.positives) | set(self.negatives))


def partition_annotations(
    records: Iterable[tuple[str, str, int]]
) -> tuple[Partition, set[str]]:
    """Splits final (lemma, concept_id, label) rows into P/N sets + removals."""
    seen: dict[tuple[str, str], int] = {}
    part = Partition()
    removed: set[str] = set()
    for lemma, cid, label in records:
        if label not in (0, 1, 2):
            raise ValueError(f"label must be 0, 1 or 2, got {label!r}")
        key = (lemma, cid)
        if key in seen:
            if seen[key] != label:
                raise AdjudicationIntegrityError(
                    f"conflicting final labels for pair {key}: {seen[key]} vs {label}"
                )
            continue
        seen[key] = label
        if label == 1:
            part.positives.setdefault(cid, set()).add(lemma)
        elif label == 0:
            part.negatives.setdefault(cid, set()).add(lemma)
        else:
            removed.add(lemma)
    part.validate()
    return part, removed


@dataclass(frozen=True)
class TrainingTriplet:
    query: str
    positives: tuple[str, ...]
    negatives: tuple[str, ...]

    def __post_init__(self):
        if not self.query:
            raise ValueError("triplet query must be non-empty")
        if not self.positives or not self.negatives:
            raise ValueError("triplet needs positives and negatives")
        if set(self.positives) & set(self.negatives):
            raise ValueError("positives and negatives overlap")


def build_triplets(
    partition: Partition,
    inventory: ConceptInventory,
    seed: int = 0,
    negatives_k: int = 3,
) -> list[TrainingTriplet]:
    """Hard-negative training tuples, one per concept with any annotations.

    Empty P falls back to the concept's own preferred name; empty N draws
    ``negatives_k`` lemmas from the other concepts' positives. Concepts with
    no negatives available anywhere are skipped with a warning.
    """
    partition.validate()
    rng = random.Random(seed)
    triplets = []
    for cid in partition.concepts():
        concept = inventory.by_id[cid]
        query = concept.preferred_name
        pos = sorted(partition.positives.get(cid, set()))
        neg = sorted(partition.negatives.get(cid, set()))
        if not pos:
            pos = [query]
        if not neg:
            pool = sorted(
                {
                    lemma
                    for other, lemmas in partition.positives.items()
                    if other != cid
                    for lemma in lemmas
                }
                - set(pos)
            )
            if not pool:
                log.warning("no negatives available for %s; triplet skipped", cid)
                continue
            neg = sorted(rng.sample(pool, min(negatives_k, len(pool))))
        triplets.append(TrainingTriplet(query, tuple(pos), tuple(neg)))
    return triplets


def save_triplets(path: str | Path, triplets: Iterable[TrainingTriplet]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in triplets:
            fh.write(
                json.dumps(
                    {"query": t.query, "positives": list(t.positives), "negatives": list(t.negatives)},
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_triplets(path: str | Path) -> list[TrainingTriplet]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            out.append(
                TrainingTriplet(rec["query"], tuple(rec["positives"]), tuple(rec["negatives"]))
            )
    return out


@dataclass
class DictionaryEntry:
    lemma: str
    surfaces: set[str]
    round_adopted: int
    score: float


class Dictionary:
    """Accumulating concept -> lemma -> surface-forms lexicon."""

    def __init__(self):
        self.entries: dict[str, dict[str, DictionaryEntry]] = {}
        self.lemma_owner: dict[str, str] = {}

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def lemmas(self) -> set[str]:
        return set(self.lemma_owner)

    def add(self, concept_id: str, entry: DictionaryEntry) -> None:
        owner = self.lemma_owner.get(entry.lemma)
        if owner is not None:
            if owner != concept_id:
                raise AdoptionConflictError(entry.lemma, owner, concept_id)
            return  # idempotent re-add
        if not entry.surfaces:
            raise ValueError(f"entry for {entry.lemma!r} has no surface forms")
        self.entries.setdefault(concept_id, {})[entry.lemma] = entry
        self.lemma_owner[entry.lemma] = concept_id

    def save(self, path: str | Path, inventory: ConceptInventory) -> None:
        rows = []
        for cid in sorted(self.entries):
            name = inventory.by_id[cid].preferred_name
            for lemma in sorted(self.entries[cid]):
                e = self.entries[cid][lemma]
                rows.append(
                    [
                        cid,
                        escape_field(name),
                        escape_field(lemma),
                        join_list(sorted(e.surfaces)),
                        str(e.round_adopted),
                        f"{e.score:.6f}",
                    ]
                )
        write_rows(path, DICTIONARY_COLUMNS, rows)

    @classmethod
    def load(cls, path: str | Path) -> "Dictionary":
        d = cls()
        for fields in read_rows(path, expect_header=DICTIONARY_COLUMNS):
            cid, _name, lemma_raw, surfaces_raw, round_no, score = fields
            d.add(
                cid,
                DictionaryEntry(
                    unescape_field(lemma_raw),
                    set(split_list(surfaces_raw)),
                    int(round_no),
                    float(score),
                ),
            )
        return d


def accumulate(
    dictionary: Dictionary,
    partition: Partition,
    lemma_table: LemmaTable,
    candidates: Sequence[MappingCandidate],
    round_no: int,
) -> Dictionary:
    """Adds every confirmed (lemma, concept) pair with its raw surfaces."""
    partition.validate()
    score_by_pair: dict[tuple[str, str], float] = {}
    for c in candidates:
        key = (c.lemma, c.concept_id)
        score_by_pair[key] = max(score_by_pair.get(key, 0.0), c.score)
    for cid in sorted(partition.positives):
        for lemma in sorted(partition.positives[cid]):
            rec = lemma_table.get(lemma)
            surfaces = set(rec.surface_forms) if rec else {lemma}
            dictionary.add(
                cid,
                DictionaryEntry(
                    lemma=lemma,
                    surfaces=surfaces,
                    round_adopted=round_no,
                    score=score_by_pair.get((lemma, cid), 0.0),
                ),
            )
    return dictionary


@dataclass(frozen=True)
class LoopConfig:
    sample_size: int = 50
    exit_accuracy: float = 0.10
    max_rounds: int = 10
    negatives_k: int = 3
    seed: int = 0
    thresholds: ThresholdConfig = ThresholdConfig()


@dataclass
class IterationState:
    round: int
    pending_lemmas: set[str]
    config: LoopConfig
    dictionary: Dictionary
    abandoned: set[str] = field(default_factory=set)
    removed: set[str] = field(default_factory=set)
    status: str = CONTINUE

    def adopted(self) -> set[str]:
        return self.dictionary.lemmas()


def save_labels(path: str | Path, rows: Iterable[tuple[str, str, int]]) -> None:
    write_rows(
        path,
        LABELS_COLUMNS,
        (
            [escape_field(lemma), cid, str(label)]
            for lemma, cid, label in sorted(rows)
        ),
    )


def load_labels(path: str | Path) -> list[tuple[str, str, int]]:
    out = []
    for fields in read_rows(path, expect_header=LABELS_COLUMNS):
        lemma_raw, cid, label = fields
        out.append((unescape_field(lemma_raw), cid, int(label)))
    return out


class CurationRun:
    """Round artifacts and state transitions under one run directory."""

    def __init__(
        self,
        run_dir: str | Path,
        inventory: ConceptInventory,
        store: EmbeddingStore,
        lemma_table: LemmaTable,
        config: LoopConfig = LoopConfig(),
    ):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.inventory = inventory
        self.store = store
        self.lemma_table = lemma_table
        self.config = config

    # -- paths ---------------------------------------------------------
    def candidates_path(self, round_no: int) -> Path:
        return self.run_dir / f"round-{round_no}-candidates.tsv"

    def sample_path(self, round_no: int) -> Path:
        return self.run_dir / f"round-{round_no}-sample.tsv"

    def labels_path(self, round_no: int) -> Path:
        return self.run_dir / f"round-{round_no}-labels.tsv"

    def triplets_path(self, round_no: int) -> Path:
        return self.run_dir / f"round-{round_no}-triplets.jsonl"

    def state_path(self, round_no: int) -> Path:
        return self.run_dir / f"state-round-{round_no}.json"

    def dictionary_path(self) -> Path:
        return self.run_dir / "dictionary.tsv"

    # -- round phases ---------------------------------------------------
    def initial_state(self) -> IterationState:
        return IterationState(
            round=1,
            pending_lemmas=set(self.lemma_table.records),
            config=self.config,
            dictionary=Dictionary(),
        )

    def open_round(self, state: IterationState) -> list[MappingCandidate]:
        """Maps pending lemmas, persists candidates, emits the sample file."""
        if not state.pending_lemmas:
            raise EmptyInputError("no pending lemmas to map")
        index = SemanticIndex(self.inventory, self.store)
        candidates: list[MappingCandidate] = []
        excluded: set[str] = set(state.pending_lemmas)
        for lemma in sorted(state.pending_lemmas):
            found = ensemble_map(
                lemma, self.inventory, self.store, self.config.thresholds, index=index
            )
            if found:
                excluded.discard(lemma)
                candidates.extend(found)
        save_candidates(self.candidates_path(state.round), candidates, self.inventory, state.round)
        sample = (
            sample_for_validation(candidates, self.config.sample_size, self.config.seed)
            if candidates
            else []
        )
        save_candidates(self.sample_path(state.round), sample, self.inventory, state.round)
        # lemmas whose every channel fell below tau leave the loop now
        state.abandoned |= excluded
        state.pending_lemmas -= excluded
        return candidates

    def close_round(
        self, state: IterationState, labels: Sequence[tuple[str, str, int]]
    ) -> IterationState:
        """Applies final labels: exit check, partition, accumulate, triplets."""
        cand_pairs = load_candidates(self.candidates_path(state.round))
        candidates = [c for c, _ in cand_pairs]
        sample_pairs = [(c.lemma, c.concept_id) for c, _ in
                        load_candidates(self.sample_path(state.round))]
        label_by_pair = {(l, c): v for l, c, v in labels}
        missing = [p for p in sample_pairs if p not in label_by_pair]
        if missing:
            raise IncompleteRoundError(
                f"{len(missing)} sampled pair(s) have no label", missing
            )
        exit_dec = evaluate_exit(
            [label_by_pair[p] for p in sample_pairs], self.config.exit_accuracy
        )

        if exit_dec.decision == STOP:
            status = STOP
            state.abandoned |= state.pending_lemmas
            pending_next: set[str] = set()
            removed_now: set[str] = set()
            triplets = []
        else:
            labeled = [
                (c.lemma, c.concept_id, label_by_pair[(c.lemma, c.concept_id)])
                for c in candidates
                if (c.lemma, c.concept_id) in label_by_pair
            ]
            partition, removed_lemmas = partition_annotations(labeled)
            accumulate(state.dictionary, partition, self.lemma_table, candidates, state.round)
            triplets = build_triplets(
                partition, self.inventory, self.config.seed, self.config.negatives_k
            )
            adopted_now = {l for ls in partition.positives.values() for l in ls}
            removed_now = removed_lemmas - adopted_now
            labeled_lemmas = {l for l, _, _ in labeled}
            rejected = {
                l
                for ls in partition.negatives.values()
                for l in ls
                if l not in adopted_now and l not in removed_now
            }
            unlabeled = state.pending_lemmas - labeled_lemmas
            if unlabeled:
                log.warning(
                    "%d candidate lemma(s) had no labels this round; carried forward",
                    len(unlabeled),
                )
            pending_next = rejected | unlabeled
            status = COMPLETE if not pending_next else CONTINUE
            if pending_next and state.round >= self.config.max_rounds:
                # round budget exhausted: keep this round's adoptions but
                # do not open another cycle
                status = STOP
                state.abandoned |= pending_next
                pending_next = set()
        save_triplets(self.triplets_path(state.round), triplets)

        next_state = IterationState(
            round=state.round + 1,
            pending_lemmas=pending_next,
            config=state.config,
            dictionary=state.dictionary,
            abandoned=set(state.abandoned),
            removed=state.removed | removed_now,
            status=status,
        )
        self._check_conservation(next_state)
        state.dictionary.save(self.dictionary_path(), self.inventory)
        self._write_journal(state.round, next_state, exit_dec)
        return next_state

    def run_round(
        self, state: IterationState, labels: Sequence[tuple[str, str, int]] | None = None
    ) -> IterationState:
        """One full cycle; labels default to the round's labels file."""
        self.open_round(state)
        if labels is None:
            labels_file = self.labels_path(state.round)
            if not labels_file.exists():
                raise IncompleteRoundError(
                    f"labels file missing for round {state.round}: {labels_file}"
                )
            labels = load_labels(labels_file)
        return self.close_round(state, labels)

    # -- bookkeeping ----------------------------------------------------
    def _check_conservation(self, state: IterationState) -> None:
        total = len(self.lemma_table.records)
        buckets = (
            len(state.adopted())
            + len(state.abandoned)
            + len(state.removed)
            + len(state.pending_lemmas)
        )
        if buckets != total:
            raise AdjudicationIntegrityError(
                f"lemma conservation violated: adopted {len(state.adopted())} + "
                f"abandoned {len(state.abandoned)} + removed {len(state.removed)} + "
                f"pending {len(state.pending_lemmas)} != initial {total}"
            )

    def _write_journal(self, round_no: int, state: IterationState, exit_dec: ExitDecision) -> None:
        doc = {
            "round": round_no,
            "status": state.status,
            "accuracy": exit_dec.accuracy,
            "sample": {
                "correct": exit_dec.n_correct,
                "wrong": exit_dec.n_wrong,
                "non_symptom": exit_dec.n_non_symptom,
            },
            "adopted": sorted(state.adopted()),
            "abandoned": sorted(state.abandoned),
            "removed": sorted(state.removed),
            "pending": sorted(state.pending_lemmas),
            "config": {
                "sample_size": self.config.sample_size,
                "exit_accuracy": self.config.exit_accuracy,
                "max_rounds": self.config.max_rounds,
                "negatives_k": self.config.negatives_k,
                "seed": self.config.seed,
                "tau_semantic": self.config.thresholds.tau_semantic,
                "tau_lexical": self.config.thresholds.tau_lexical,
            },
        }
        with open(self.state_path(round_no), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
