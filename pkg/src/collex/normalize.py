"""Surface-form normalization: rewrite rules, lemmatization, aggregation.

The rewrite engine applies whole-word phrase substitutions: both pattern and
text are padded with single spaces, so "issues" can never fire inside
"reissues". Rules run in file order within a pass and passes repeat until
the text stops changing (bounded, to surface rule cycles as errors instead
of hangs).
"""

from __future__ import annotations

import logging
import random
import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .errors import EmptyInputError, RuleCycleError
from .tsvio import escape_field, read_rows, split_escaped, unescape_field, write_rows

log = logging.getLogger(__name__)

MAX_PASSES = 10
SAMPLE_ID_CAP = 50

_WS_RE = re.compile(r"\s+")
_PARENS_RE = re.compile(r"\([^()]*\)")
_COMMA_SPACE_RE = re.compile(r"\s*,\s*")

# Kept characters beyond word characters: commas separate compound symptoms,
# asterisks mask letters, apostrophes are part of words (can't, 'm).
_KEPT_PUNCT = frozenset(",*'")


@lru_cache(maxsize=4096)
def _is_removable_punct(ch: str) -> bool:
    return ch not in _KEPT_PUNCT and unicodedata.category(ch).startswith("P")


_ASCII_PUNCT_TABLE = {
    ord(c): " " for c in map(chr, range(128)) if _is_removable_punct(c)
}


def strip_punctuation(text: str) -> str:
    """Replaces punctuation with spaces, keeping commas, asterisks, apostrophes."""
    if text.isascii():
        return text.translate(_ASCII_PUNCT_TABLE)
    return "".join(" " if _is_removable_punct(c) else c for c in text)


@dataclass(frozen=True)
class RewriteRule:
    sources: tuple[str, ...]
    target: str
    order: int = 0

    def __post_init__(self):
        if not self.sources or any(not s for s in self.sources):
            raise ValueError("rule sources must be non-empty")
        if any(s == self.target for s in self.sources):
            raise ValueError(f"rule maps {self.target!r} to itself")


class RuleSet:
    """Ordered rewrite rules with precompiled padded patterns."""

    def __init__(self, rules: Iterable[RewriteRule]):
        self.rules = list(rules)
        self._compiled: list[tuple[str, str]] = []
        self._first_words: frozenset[str] = frozenset()
        first = set()
        for rule in self.rules:
            repl = f" {rule.target} " if rule.target else " "
            # longest source first so "most of" wins over "most"
            for src in sorted(rule.sources, key=lambda s: (-len(s), rule.sources.index(s))):
                self._compiled.append((f" {src} ", repl))
                first.add(src.split(" ", 1)[0])
        self._first_words = frozenset(first)

    def __len__(self) -> int:
        return len(self.rules)

    @classmethod
    def load(cls, path: str | Path) -> "RuleSet":
        rules = []
        with open(path, "r", encoding="utf-8") as fh:
            header_seen = False
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                if not header_seen:
                    if line.split("\t")[:2] != ["sources", "target"]:
                        raise ValueError(f"rules file must start with 'sources\\ttarget': {path}")
                    header_seen = True
                    continue
                parts = line.split("\t")
                sources_field = parts[0]
                target = parts[1] if len(parts) > 1 else ""
                sources = tuple(
                    s.strip() for s in sources_field.split(",") if s.strip()
                )
                rules.append(RewriteRule(sources, target.strip(), order=len(rules)))
        return cls(rules)


def default_rules() -> RuleSet:
    return RuleSet.load(Path(__file__).parent / "assets" / "rules-default.tsv")


def apply_rules(phrase: str, rules: RuleSet, max_passes: int = MAX_PASSES) -> str:
    """Lowercases, strips parens/punctuation, then rewrites to a fixpoint."""
    s = phrase.lower()
    if "(" in s or ")" in s:
        while True:
            stripped = _PARENS_RE.sub(" ", s)
            if stripped == s:
                break
            s = stripped
        s = s.replace("(", " ").replace(")", " ")
    s = strip_punctuation(s)
    if "," in s:
        s = s.replace(",", " , ")
    tokens = s.split()
    s = " " + " ".join(tokens) + " "
    # a pass can only change anything if some token starts a rule source
    if rules._first_words.intersection(tokens):
        compiled = rules._compiled
        for _ in range(max_passes):
            before = s
            for pattern, repl in compiled:
                if pattern in s:
                    s = s.replace(pattern, repl)
            if s == before:
                break
        else:
            raise RuleCycleError(phrase, max_passes)
    if "," in s:
        return _COMMA_SPACE_RE.sub(", ", s).strip()
    return s.strip()


class Lemmatizer(Protocol):
    def lemma(self, token: str) -> str: ...


class SuffixLemmatizer:
    """Deterministic English suffix stripper with an exceptions table.

    Handles plural -s/-es/-ies and -ing/-ed with consonant-doubling undo;
    numeric tokens lemmatize to "number" (mirroring common taggers, so the
    downstream "number" filter removes them). Everything irregular belongs
    in the exceptions file.
    """

    _NO_UNDOUBLE = frozenset("lszf")
    _VOWELS = frozenset("aeiou")

    def __init__(self, exceptions: dict[str, str] | None = None):
        self.exceptions = dict(exceptions or {})

    @classmethod
    def load(cls, path: str | Path) -> "SuffixLemmatizer":
        exceptions = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                word, lemma = line.split("\t", 1)
                exceptions[word] = lemma
        return cls(exceptions)

    @classmethod
    def default(cls) -> "SuffixLemmatizer":
        return cls.load(Path(__file__).parent / "assets" / "lemma-exceptions.tsv")

    def _has_vowel(self, s: str) -> bool:
        return any(c in self._VOWELS for c in s)

    def _undouble(self, stem: str) -> str:
        if (
            len(stem) >= 2
            and stem[-1] == stem[-2]
            and stem[-1] not in self._VOWELS
            and stem[-1] not in self._NO_UNDOUBLE
        ):
            return stem[:-1]
        return stem

    def lemma(self, token: str) -> str:
        if token in self.exceptions:
            return self.exceptions[token]
        if token.isdigit():
            return "number"
        n = len(token)
        if n < 4:
            return token
        if token.endswith("'s"):
            return token[:-2]
        if token.endswith("ing") and n > 5:
            stem = token[:-3]
            if self._has_vowel(stem):
                return self._undouble(stem)
            return token
        if token.endswith("ed") and n > 4:
            stem = token[:-2]
            if self._has_vowel(stem):
                return self._undouble(stem)
            return token
        if token.endswith("aches"):
            return token[:-1]
        if token.endswith("ies") and n > 4:
            return token[:-3] + "y"
        if token.endswith(("sses", "shes", "ches", "xes", "zzes")):
            return token[:-2]
        if token.endswith("es"):
            return token[:-1]
        if token.endswith("s") and not token.endswith(("ss", "us", "is")):
            return token[:-1]
        return token


def lemmatize(phrase: str, lemmatizer: Lemmatizer, rules: RuleSet) -> str:
    """Per-token lemmas, "number" tokens dropped, then one more rule pass."""
    kept = []
    for token in phrase.split():
        lem = lemmatizer.lemma(token)
        if lem == "number":
            continue
        kept.append(lem)
    if not kept:
        return ""
    return apply_rules(" ".join(kept), rules)


def normalize_surface(surface: str, rules: RuleSet, lemmatizer: Lemmatizer) -> list[str]:
    """Full normalization of one raw surface; commas split compound symptoms."""
    rewritten = apply_rules(surface, rules)
    lemmas = []
    for piece in rewritten.split(","):
        piece = piece.strip()
        if not piece:
            continue
        lem = lemmatize(piece, lemmatizer, rules)
        if lem:
            lemmas.append(lem)
    return lemmas


@dataclass
class LemmaRecord:
    lemma: str
    count: int = 0
    surface_forms: dict[str, int] = field(default_factory=dict)
    sample_tweet_ids: list[str] = field(default_factory=list)

    def validate(self) -> None:
        assert self.lemma, "lemma must be non-empty"
        assert self.count == sum(self.surface_forms.values()), self.lemma
        assert len(self.sample_tweet_ids) <= SAMPLE_ID_CAP


LEMMA_TABLE_COLUMNS = ["lemma", "count", "surfaces", "sample_ids"]


class LemmaTable:
    """Aggregated lemma records keyed by lemma text."""

    def __init__(self):
        self.records: dict[str, LemmaRecord] = {}
        self._seen: dict[str, int] = {}
        self._rngs: dict[str, random.Random] = {}
        self.seed = 0

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, lemma: str) -> bool:
        return lemma in self.records

    def get(self, lemma: str) -> LemmaRecord | None:
        return self.records.get(lemma)

    def counts(self) -> list[int]:
        return [r.count for r in self.records.values()]

    def add_mention(self, lemma: str, surface: str, tweet_id: str) -> None:
        rec = self.records.get(lemma)
        if rec is None:
            rec = self.records[lemma] = LemmaRecord(lemma)
            self._seen[lemma] = 0
            self._rngs[lemma] = random.Random(f"{self.seed}:{lemma}")
        rec.count += 1
        rec.surface_forms[surface] = rec.surface_forms.get(surface, 0) + 1
        # reservoir sampling keeps a uniform, deterministic id sample
        seen = self._seen[lemma] = self._seen[lemma] + 1
        if len(rec.sample_tweet_ids) < SAMPLE_ID_CAP:
            rec.sample_tweet_ids.append(tweet_id)
        else:
            j = self._rngs[lemma].randrange(seen)
            if j < SAMPLE_ID_CAP:
                rec.sample_tweet_ids[j] = tweet_id

    def save(self, path: str | Path) -> None:
        rows = []
        for lemma in sorted(self.records, key=lambda k: (-self.records[k].count, k)):
            rec = self.records[lemma]
            surfaces = ";".join(
                f"{escape_field(s, extra=';:')}:{c}"
                for s, c in sorted(rec.surface_forms.items(), key=lambda kv: (-kv[1], kv[0]))
            )
            rows.append(
                [
                    escape_field(rec.lemma),
                    str(rec.count),
                    surfaces,
                    ",".join(escape_field(t, extra=",") for t in rec.sample_tweet_ids),
                ]
            )
        write_rows(path, LEMMA_TABLE_COLUMNS, rows)

    @classmethod
    def load(cls, path: str | Path) -> "LemmaTable":
        table = cls()
        for fields in read_rows(path, expect_header=LEMMA_TABLE_COLUMNS):
            lemma_raw, count_raw, surfaces_raw, ids_raw = fields
            rec = LemmaRecord(unescape_field(lemma_raw), int(count_raw))
            if surfaces_raw:
                for part in split_escaped(surfaces_raw, ";"):
                    surf_raw, cnt = part.rsplit(":", 1)
                    rec.surface_forms[unescape_field(surf_raw)] = int(cnt)
            if ids_raw:
                rec.sample_tweet_ids = [
                    unescape_field(p) for p in split_escaped(ids_raw, ",")
                ]
            rec.validate()
            table.records[rec.lemma] = rec
        return table


def aggregate(
    pairs: Iterable[tuple[str, str, str]], seed: int = 0
) -> LemmaTable:
    """Builds a LemmaTable from (lemma, surface, tweet_id) triples."""
    table = LemmaTable()
    table.seed = seed
    for lemma, surface, tweet_id in pairs:
        table.add_mention(lemma, surface, tweet_id)
    for rec in table.records.values():
        rec.validate()
    return table


def frequency_filter(table: LemmaTable, min_count: int = 10) -> LemmaTable:
    """Keeps exactly the records with count >= min_count."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    out = LemmaTable()
    out.seed = table.seed
    for lemma, rec in table.records.items():
        if rec.count >= min_count:
            out.records[lemma] = rec
    return out


@dataclass(frozen=True)
class FrequencyStats:
    mean: float
    std_dev: float
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    def validate(self) -> None:
        assert self.minimum <= self.q1 <= self.median <= self.q3 <= self.maximum
        assert self.std_dev >= 0


def summarize(table: LemmaTable) -> FrequencyStats:
    """Population statistics over per-lemma occurrence counts."""
    counts = table.counts()
    if not counts:
        raise EmptyInputError("cannot summarize an empty lemma table")
    arr = np.asarray(counts, dtype=np.float64)
    q1, median, q3 = np.percentile(arr, [25, 50, 75], method="linear")
    stats = FrequencyStats(
        mean=float(arr.mean()),
        std_dev=float(arr.std(ddof=0)),
        minimum=float(arr.min()),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        maximum=float(arr.max()),
    )
    stats.validate()
    return stats


def _fmt(v: float) -> str:
    if v == int(v):
        return str(int(v))
    return f"{v:.2f}".rstrip("0").rstrip(".")


def render_stats_text(columns: list[tuple[str, FrequencyStats]]) -> str:
    """Two-column summary table: one column per lemma-table variant."""
    rows = [
        ("Mean", lambda s: _fmt(s.mean)),
        ("Standard deviation", lambda s: _fmt(s.std_dev)),
        ("Minimum", lambda s: _fmt(s.minimum)),
        ("Median [Interquartile Range]",
         lambda s: f"{_fmt(s.median)} [{_fmt(s.q1)}, {_fmt(s.q3)}]"),
        ("Maximum", lambda s: _fmt(s.maximum)),
    ]
    header = [""] + [label for label, _ in columns]
    lines = ["\t".join(header)]
    for name, getter in rows:
        lines.append("\t".join([name] + [getter(stats) for _, stats in columns]))
    return "\n".join(lines) + "\n"


def render_stats_tsv(columns: list[tuple[str, FrequencyStats]]) -> str:
    lines = ["variant\tmean\tstd_dev\tminimum\tq1\tmedian\tq3\tmaximum"]
    for label, s in columns:
        lines.append(
            "\t".join(
                [label] + [_fmt(v) for v in (s.mean, s.std_dev, s.minimum, s.q1, s.median, s.q3, s.maximum)]
            )
        )
    return "\n".join(lines) + "\n"
