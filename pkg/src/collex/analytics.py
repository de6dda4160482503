"""Dictionary application and frequency reporting.

A tweet scores one hit per concept no matter how many of that concept's
surfaces it contains; N is the number of tweets with at least one hit, and
report percentages are computed against N (a tweet can carry several
symptoms, so column percentages may sum past 100).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .curation import Dictionary
from .errors import ConfigurationError, IntegrityError
from .textmatch import PhraseMatcher
from .tsvio import escape_field, read_rows, unescape_field, write_rows

log = logging.getLogger(__name__)


class DictionaryMatcher:
    """Multi-pattern automaton over every surface form of a dictionary."""

    def __init__(self, dictionary: Dictionary):
        if not len(dictionary):
            raise ConfigurationError("cannot match with an empty dictionary")
        self._matcher = PhraseMatcher()
        for cid, lemmas in dictionary.entries.items():
            for entry in lemmas.values():
                for surface in entry.surfaces:
                    if surface.strip():
                        self._matcher.add(surface, cid)

    def concepts_in(self, text: str) -> set[str]:
        return self._matcher.matched_payloads(text)


@dataclass
class MatchResult:
    counts: dict[str, int]
    total_matched_tweets: int
    total_tweets: int


def match_corpus(
    tweets: Iterable[tuple[str, str]],
    dictionary: Dictionary,
    hits_sink=None,
) -> MatchResult:
    """Counts concept hits over (tweet_id, pre-cleaned text) pairs.

    ``hits_sink``, when given, receives one (tweet_id, sorted concept ids)
    pair per matched tweet, in corpus order.
    """
    matcher = DictionaryMatcher(dictionary)
    counts: dict[str, int] = {}
    n_matched = 0
    n_total = 0
    for tweet_id, text in tweets:
        n_total += 1
        hit = matcher.concepts_in(text)
        if not hit:
            continue
        n_matched += 1
        for cid in hit:
            counts[cid] = counts.get(cid, 0) + 1
        if hits_sink is not None:
            hits_sink(tweet_id, sorted(hit))
    return MatchResult(counts, n_matched, n_total)


class MergeMap:
    """Concept/name -> merged symptom name; unmapped keys pass through."""

    def __init__(self, mapping: Mapping[str, str] | None = None):
        self.mapping = dict(mapping or {})

    def __len__(self) -> int:
        return len(self.mapping)

    def resolve(self, name: str) -> str:
        return self.mapping.get(name, name)

    @classmethod
    def load(cls, path: str | Path) -> "MergeMap":
        mapping: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            header_seen = False
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                if not header_seen:
                    if line.split("\t") != ["concept_name", "merged_name"]:
                        raise ValueError(f"bad merge map header in {path}")
                    header_seen = True
                    continue
                src, dst = line.split("\t", 1)
                src, dst = unescape_field(src), unescape_field(dst)
                if src in mapping and mapping[src] != dst:
                    raise ValueError(f"merge map maps {src!r} to two targets")
                mapping[src] = dst
        return cls(mapping)

    @classmethod
    def default(cls) -> "MergeMap":
        return cls.load(Path(__file__).parent / "assets" / "appendix-d-merge.tsv")


def merge(counts: Mapping[str, int], merge_map: MergeMap) -> dict[str, int]:
    """Sums counts under merged names; conserves total mass."""
    out: dict[str, int] = {}
    for name, count in counts.items():
        target = merge_map.resolve(name)
        out[target] = out.get(target, 0) + count
    return out


@dataclass(frozen=True)
class ReportRow:
    symptom: str
    count: int
    percent: float


@dataclass
class FrequencyReport:
    total_matched_tweets: int
    rows: list[ReportRow]

    def validate(self) -> None:
        for row in self.rows:
            assert 0.0 <= row.percent <= 100.0, row
        assert all(
            a.count >= b.count for a, b in zip(self.rows, self.rows[1:])
        ), "rows must be sorted by count descending"


def report(
    counts: Mapping[str, int], n: int, min_count: int = 500
) -> FrequencyReport:
    """Rows with count >= min_count, percentages against N."""
    if n < 0:
        raise ValueError("N must be >= 0")
    if n == 0 and any(counts.values()):
        raise IntegrityError("N is zero but concept counts are non-zero")
    rows = []
    for name in sorted(counts, key=lambda k: (-counts[k], k)):
        count = counts[name]
        if count < min_count:
            continue
        rows.append(ReportRow(name, count, 100.0 * count / n if n else 0.0))
    rep = FrequencyReport(n, rows)
    rep.validate()
    return rep


def format_cell(count: int, percent: float) -> str:
    return f"{count} ({percent:.1f}%)"


REPORT_COLUMNS = ["symptom", "count", "percent"]


def save_report(path: str | Path, rep: FrequencyReport) -> None:
    rows = [
        [escape_field(r.symptom), str(r.count), f"{r.percent:.1f}"] for r in rep.rows
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# N\t{rep.total_matched_tweets}\n")
        fh.write("\t".join(REPORT_COLUMNS) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def load_report(path: str | Path) -> FrequencyReport:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n").split("\t")
        if first[0] != "# N":
            raise ValueError(f"report must start with '# N': {path}")
        n = int(first[1])
        header = fh.readline().rstrip("\n").split("\t")
        if header != REPORT_COLUMNS:
            raise ValueError(f"bad report header in {path}")
        rows = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            symptom, count, percent = line.split("\t")
            rows.append(ReportRow(unescape_field(symptom), int(count), float(percent)))
    return FrequencyReport(n, rows)


def render_report_text(rep: FrequencyReport, title: str = "Symptoms") -> str:
    width = max([len(title)] + [len(r.symptom) for r in rep.rows]) if rep.rows else len(title)
    lines = [f"{title:<{width}}  N={rep.total_matched_tweets:,}"]
    for r in rep.rows:
        lines.append(f"{r.symptom:<{width}}  {format_cell(r.count, r.percent)}")
    return "\n".join(lines) + "\n"


NA = "N/A"


def compare(
    report_a: FrequencyReport,
    report_b: FrequencyReport,
    alignment: Mapping[str, str] | None = None,
    labels: tuple[str, str] = ("A", "B"),
) -> list[list[str]]:
    """Side-by-side rows [symptom, cell_a, cell_b]; absences render N/A.

    ``alignment`` renames symptoms (applied to both reports) onto a shared
    scheme before the union of rows is formed.
    """
    alignment = dict(alignment or {})

    def aligned(rep: FrequencyReport) -> dict[str, ReportRow]:
        out = {}
        for row in rep.rows:
            name = alignment.get(row.symptom, row.symptom)
            if name in out:  # two rows merged by alignment: sum them
                prev = out[name]
                count = prev.count + row.count
                pct = 100.0 * count / rep.total_matched_tweets if rep.total_matched_tweets else 0.0
                out[name] = ReportRow(name, count, pct)
            else:
                out[name] = ReportRow(name, row.count, row.percent)
        return out

    rows_a = aligned(report_a)
    rows_b = aligned(report_b)
    names = sorted(
        set(rows_a) | set(rows_b),
        key=lambda s: (-(rows_a[s].count if s in rows_a else -1), s),
    )
    table = [["symptom", labels[0], labels[1]]]
    for name in names:
        cell_a = format_cell(rows_a[name].count, rows_a[name].percent) if name in rows_a else NA
        cell_b = format_cell(rows_b[name].count, rows_b[name].percent) if name in rows_b else NA
        table.append([name, cell_a, cell_b])
    return table


def save_comparison(path: str | Path, table: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in table:
            fh.write("\t".join(escape_field(c) for c in row) + "\n")
