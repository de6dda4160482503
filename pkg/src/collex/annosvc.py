"""Annotation round management: set assignment, labels, agreement, adjudication.

A round covers the candidate pairs of one mapping cycle. Pairs are split
into three near-equal sets; set i goes to annotators i and (i+1) mod 3, so
every pair has exactly two annotators and every annotator two sets. Label
writes go through an append-only journal; replaying the journal rebuilds
identical state.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import ContextIndex
from .curation import Dictionary
from .errors import (
    AuthorizationError,
    ConfigurationError,
    EmptyInputError,
    IncompleteAdjudicationError,
    PairNotFoundError,
    ValidationError,
)
from .textmatch import PhraseMatcher

log = logging.getLogger(__name__)

LABELS = (0, 1, 2)
CONTEXT_TWEET_CAP = 10


def pair_id_for(lemma: str, concept_id: str) -> str:
    digest = hashlib.sha1(f"{lemma}\t{concept_id}".encode("utf-8")).hexdigest()
    return digest[:12]


@dataclass(frozen=True)
class AnnotationTask:
    pair_id: str
    lemma: str
    concept_id: str
    concept_name: str
    set_index: int
    assigned_annotators: tuple[str, str]
    context_tweets: tuple[str, ...] = ()
    low_context: bool = False

    def __post_init__(self):
        if len(self.assigned_annotators) != 2:
            raise ValueError("a task needs exactly two annotators")
        if len(self.context_tweets) > CONTEXT_TWEET_CAP:
            raise ValueError("at most ten context tweets per task")


@dataclass(frozen=True)
class AnnotationRecord:
    pair_id: str
    annotator_id: str
    label: int
    timestamp: str = ""

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValidationError(f"label must be one of {LABELS}, got {self.label!r}")


def split_and_assign(
    pairs: Sequence[tuple[str, str, str]],
    annotators: Sequence[str],
    seed: int = 0,
) -> list[AnnotationTask]:
    """Deterministic three-set split of (lemma, concept_id, concept_name)."""
    if len(annotators) != 3:
        raise ConfigurationError(f"exactly 3 annotators required, got {len(annotators)}")
    if len(set(annotators)) != 3:
        raise ConfigurationError("annotator ids must be distinct")
    if len(pairs) < 3:
        raise ConfigurationError("need at least 3 pairs to split into sets")
    ordered = sorted(pairs, key=lambda p: (p[0], p[1]))
    random.Random(seed).shuffle(ordered)
    n = len(ordered)
    base, extra = divmod(n, 3)
    tasks = []
    start = 0
    for set_index in range(3):
        size = base + (1 if set_index < extra else 0)
        assignees = (annotators[set_index], annotators[(set_index + 1) % 3])
        for lemma, cid, cname in ordered[start : start + size]:
            tasks.append(
                AnnotationTask(
                    pair_id=pair_id_for(lemma, cid),
                    lemma=lemma,
                    concept_id=cid,
                    concept_name=cname,
                    set_index=set_index,
                    assigned_annotators=assignees,
                )
            )
        start += size
    return tasks


class ContextFinder:
    """Tweet lookup by lemma surface forms over a context index.

    One corpus pass builds per-lemma tweet-id lists; annotators see the raw
    colloquial usage, so matching runs on surface forms, not lemmas.
    """

    def __init__(self, index: ContextIndex, surfaces_by_lemma: Mapping[str, Iterable[str]]):
        self.index = index
        matcher = PhraseMatcher()
        for lemma, surfaces in surfaces_by_lemma.items():
            added = False
            for surface in surfaces:
                if surface.strip():
                    matcher.add(surface, lemma)
                    added = True
            if not added:
                matcher.add(lemma, lemma)
        self.tweet_ids: dict[str, list[str]] = {}
        for tid, text in sorted(index.items()):
            for lemma in sorted(matcher.matched_payloads(text)):
                self.tweet_ids.setdefault(lemma, []).append(tid)

    def sample(
        self, lemma: str, n: int = CONTEXT_TWEET_CAP, seed: int = 0, salt: str = ""
    ) -> tuple[list[str], bool]:
        """Up to n context tweet texts and a low-context flag."""
        ids = self.tweet_ids.get(lemma, [])
        if len(ids) > n:
            rng = random.Random(f"{seed}:{salt or lemma}")
            ids = sorted(rng.sample(ids, n))
        texts = [self.index.get(t) or "" for t in ids]
        return texts, len(texts) == 0


def attach_context(
    task: AnnotationTask,
    finder: ContextFinder,
    seed: int = 0,
) -> AnnotationTask:
    texts, low = finder.sample(task.lemma, CONTEXT_TWEET_CAP, seed, salt=task.pair_id)
    return replace(task, context_tweets=tuple(texts), low_context=low)


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    observed_agreement: float
    expected_agreement: float
    n_items: int
    degenerate: bool = False


def cohen_kappa(
    a: Mapping[str, int],
    b: Mapping[str, int],
    categories: Sequence[int] = LABELS,
) -> KappaResult:
    """Chance-corrected agreement between two raters over shared items.

    Computed in exact rational arithmetic so algebraically clean results
    (identical raters, the 0.5 textbook case) come out exact in float.
    """
    common = sorted(set(a) & set(b))
    if not common:
        raise EmptyInputError("raters share no labeled pairs")
    n = len(common)
    agree = sum(1 for k in common if a[k] == b[k])
    p_o = Fraction(agree, n)
    p_e = Fraction(0)
    for cat in categories:
        na = sum(1 for k in common if a[k] == cat)
        nb = sum(1 for k in common if b[k] == cat)
        p_e += Fraction(na, n) * Fraction(nb, n)
    if p_e == 1:
        # both raters constant on one category: formula undefined
        kappa = 1.0 if p_o == 1 else 0.0
        return KappaResult(kappa, float(p_o), float(p_e), n, degenerate=True)
    kappa = (p_o - p_e) / (1 - p_e)
    return KappaResult(float(kappa), float(p_o), float(p_e), n)


def adjudicate(
    disagreements: Sequence[tuple[str, int, int]],
    resolutions: Mapping[str, int | tuple[int, str]],
) -> dict[str, int]:
    """Final labels for disagreeing pairs.

    A resolution must repeat one of the two submitted labels; anything else
    is an override and requires a note.
    """
    final: dict[str, int] = {}
    unresolved = []
    for pair_id, la, lb in disagreements:
        if pair_id not in resolutions:
            unresolved.append(pair_id)
            continue
        res = resolutions[pair_id]
        note = ""
        if isinstance(res, tuple):
            res, note = res
        if res not in LABELS:
            raise ValidationError(f"resolution for {pair_id} must be in {LABELS}")
        if res not in (la, lb) and not note:
            raise ValidationError(
                f"resolution {res} for {pair_id} matches neither submitted label "
                f"({la}, {lb}) and has no override note"
            )
        final[pair_id] = res
    if unresolved:
        raise IncompleteAdjudicationError(unresolved)
    return final


class AnnotationRound:
    """Mutable state of one annotation round, journaled to disk."""

    def __init__(
        self,
        round_no: int,
        tasks: Sequence[AnnotationTask],
        journal_path: str | Path | None = None,
    ):
        self.round_no = round_no
        self.tasks: dict[str, AnnotationTask] = {}
        for t in tasks:
            if t.pair_id in self.tasks:
                raise ValidationError(f"duplicate pair_id {t.pair_id}")
            self.tasks[t.pair_id] = t
        self.labels: dict[tuple[str, str], int] = {}
        self.audit: list[AnnotationRecord] = []
        self.adjudications: dict[str, tuple[int, str]] = {}
        self.journal_path = Path(journal_path) if journal_path else None
        if self.journal_path and self.journal_path.exists():
            self._replay()

    # -- journaling ------------------------------------------------------
    def _append_journal(self, event: dict) -> None:
        if self.journal_path is None:
            return
        self.journal_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.journal_path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()

    def _replay(self) -> None:
        with open(self.journal_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                ev = json.loads(line)
                if ev["type"] == "label":
                    rec = AnnotationRecord(
                        ev["pair_id"], ev["annotator_id"], ev["label"], ev.get("ts", "")
                    )
                    self._apply_label(rec)
                elif ev["type"] == "adjudication":
                    self.adjudications[ev["pair_id"]] = (ev["label"], ev.get("note", ""))

    # -- labeling --------------------------------------------------------
    def _apply_label(self, record: AnnotationRecord) -> None:
        task = self.tasks.get(record.pair_id)
        if task is None:
            raise PairNotFoundError(f"unknown pair {record.pair_id!r}")
        if record.annotator_id not in task.assigned_annotators:
            raise AuthorizationError(
                f"annotator {record.annotator_id!r} is not assigned pair {record.pair_id}"
            )
        self.labels[(record.pair_id, record.annotator_id)] = record.label
        self.audit.append(record)

    def record_label(self, record: AnnotationRecord) -> None:
        self._apply_label(record)
        self._append_journal(
            {
                "type": "label",
                "pair_id": record.pair_id,
                "annotator_id": record.annotator_id,
                "label": record.label,
                "ts": record.timestamp,
            }
        )

    def record_adjudication(self, pair_id: str, label: int, note: str = "") -> None:
        if pair_id not in self.tasks:
            raise PairNotFoundError(f"unknown pair {pair_id!r}")
        la, lb = self.pair_labels(pair_id)
        if la is None or lb is None:
            raise ValidationError(f"pair {pair_id} is not fully labeled yet")
        adjudicate([(pair_id, la, lb)], {pair_id: (label, note) if note else label})
        self.adjudications[pair_id] = (label, note)
        self._append_journal(
            {"type": "adjudication", "pair_id": pair_id, "label": label, "note": note}
        )

    # -- queries ---------------------------------------------------------
    def tasks_for(self, annotator_id: str) -> list[AnnotationTask]:
        return sorted(
            (t for t in self.tasks.values() if annotator_id in t.assigned_annotators),
            key=lambda t: (t.set_index, t.lemma, t.concept_id),
        )

    def next_task(self, annotator_id: str) -> AnnotationTask | None:
        for task in self.tasks_for(annotator_id):
            if (task.pair_id, annotator_id) not in self.labels:
                return task
        return None

    def pair_labels(self, pair_id: str) -> tuple[int | None, int | None]:
        task = self.tasks[pair_id]
        a, b = task.assigned_annotators
        return self.labels.get((pair_id, a)), self.labels.get((pair_id, b))

    def progress(self) -> dict:
        per_annotator: dict[str, dict[str, int]] = {}
        for task in self.tasks.values():
            for ann in task.assigned_annotators:
                bucket = per_annotator.setdefault(ann, {"assigned": 0, "labeled": 0})
                bucket["assigned"] += 1
                if (task.pair_id, ann) in self.labels:
                    bucket["labeled"] += 1
        total = sum(v["assigned"] for v in per_annotator.values())
        done = sum(v["labeled"] for v in per_annotator.values())
        return {
            "round": self.round_no,
            "pairs": len(self.tasks),
            "labels_expected": total,
            "labels_recorded": done,
            "by_annotator": dict(sorted(per_annotator.items())),
        }

    def kappa_by_set(self) -> dict:
        """Per-set pairwise kappas plus their size-weighted mean."""
        per_set = {}
        weighted_num = 0.0
        weighted_den = 0
        for set_index in range(3):
            tasks = [t for t in self.tasks.values() if t.set_index == set_index]
            if not tasks:
                continue
            a_id, b_id = tasks[0].assigned_annotators
            a = {
                t.pair_id: self.labels[(t.pair_id, a_id)]
                for t in tasks
                if (t.pair_id, a_id) in self.labels and (t.pair_id, b_id) in self.labels
            }
            b = {pid: self.labels[(pid, b_id)] for pid in a}
            if not a:
                continue
            result = cohen_kappa(a, b)
            per_set[set_index] = {
                "annotators": [a_id, b_id],
                "kappa": result.kappa,
                "observed_agreement": result.observed_agreement,
                "expected_agreement": result.expected_agreement,
                "n_items": result.n_items,
                "degenerate": result.degenerate,
            }
            weighted_num += result.kappa * result.n_items
            weighted_den += result.n_items
        mean = weighted_num / weighted_den if weighted_den else None
        return {"per_set": per_set, "weighted_mean": mean}

    def disagreements(self) -> list[dict]:
        out = []
        for pair_id in sorted(self.tasks):
            la, lb = self.pair_labels(pair_id)
            if la is None or lb is None or la == lb:
                continue
            entry = {"pair_id": pair_id, "labels": [la, lb],
                     "lemma": self.tasks[pair_id].lemma,
                     "concept_id": self.tasks[pair_id].concept_id}
            if pair_id in self.adjudications:
                label, note = self.adjudications[pair_id]
                entry["resolution"] = label
                entry["note"] = note
            out.append(entry)
        return out

    def unresolved(self) -> list[str]:
        return [d["pair_id"] for d in self.disagreements() if "resolution" not in d]

    def final_labels(self) -> list[tuple[str, str, int]]:
        """(lemma, concept_id, final_label) rows; raises while incomplete."""
        missing = [
            pair_id
            for pair_id in sorted(self.tasks)
            if None in self.pair_labels(pair_id)
        ]
        if missing:
            raise IncompleteAdjudicationError(missing)
        unresolved = self.unresolved()
        if unresolved:
            raise IncompleteAdjudicationError(unresolved)
        rows = []
        for pair_id, task in sorted(self.tasks.items()):
            la, lb = self.pair_labels(pair_id)
            label = la if la == lb else self.adjudications[pair_id][0]
            rows.append((task.lemma, task.concept_id, label))
        return sorted(rows)


def sanity_sample(
    dictionary: Dictionary,
    finder: ContextFinder,
    n: int = 100,
    seed: int = 0,
) -> list[dict]:
    """Review packet for the physician check: n entries with context tweets."""
    entries = []
    for cid in sorted(dictionary.entries):
        for lemma in sorted(dictionary.entries[cid]):
            entries.append((cid, lemma))
    if not entries:
        raise EmptyInputError("dictionary is empty")
    if len(entries) > n:
        entries = sorted(random.Random(seed).sample(entries, n))
    packet = []
    for cid, lemma in entries:
        texts, low = finder.sample(lemma, CONTEXT_TWEET_CAP, seed, salt=f"sanity:{lemma}")
        packet.append(
            {
                "concept_id": cid,
                "lemma": lemma,
                "context_tweets": texts,
                "low_context": low,
            }
        )
    return packet


def review_accuracy(marks: Sequence[bool]) -> float:
    """Fraction of reviewed pairs marked correct."""
    if not marks:
        raise EmptyInputError("no review marks")
    return sum(1 for m in marks if m) / len(marks)
