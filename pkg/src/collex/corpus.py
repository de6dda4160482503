"""Corpus ingestion: tweet records, inclusion filters, and the context index.

Input corpora are JSON Lines or TSV (see README for the schemas). Malformed
lines are counted and skipped so a single bad record cannot kill a
multi-hundred-million-line run; a majority of bad lines is treated as a
wrong-format signal instead.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CorpusFormatError, CorpusIntegrityError
from .tsvio import escape_field, unescape_field

log = logging.getLogger(__name__)

_URL_MARKS = ("http://", "https://", "www.")

TSV_COLUMNS = ["id", "text", "lang", "created_at", "is_retweet", "has_url"]


@dataclass(frozen=True)
class Tweet:
    id: str
    text: str
    lang: str
    created_at: datetime | None
    is_retweet: bool
    has_url: bool


@dataclass(frozen=True)
class FilterPolicy:
    allowed_langs: frozenset[str] = frozenset({"en"})
    drop_retweets: bool = True
    drop_url_tweets: bool = True

    def __post_init__(self):
        if not self.allowed_langs:
            raise ValueError("allowed_langs must be non-empty")


@dataclass
class LoadStats:
    parsed: int = 0
    skipped: int = 0


def _text_has_url(text: str) -> bool:
    lowered = text.lower()
    return any(mark in lowered for mark in _URL_MARKS)


def _parse_created_at(value) -> datetime | None:
    if not value:
        return None
    return datetime.fromisoformat(str(value).replace("Z", "+00:00"))


def _tweet_from_record(rec: dict) -> Tweet:
    tid = str(rec["id"])
    text = rec["text"]
    if not tid or not isinstance(text, str) or not text:
        raise ValueError("id and text must be non-empty")
    has_url = rec.get("has_url")
    if has_url is None:
        has_url = _text_has_url(text)
    return Tweet(
        id=tid,
        text=text,
        lang=str(rec.get("lang", "")),
        created_at=_parse_created_at(rec.get("created_at")),
        is_retweet=bool(rec.get("is_retweet", False)),
        has_url=bool(has_url),
    )


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "t", "yes"):
        return True
    if v in ("0", "false", "f", "no", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def load_tweets(
    source: str | Path | io.TextIOBase,
    fmt: str = "jsonl",
    stats: LoadStats | None = None,
) -> Iterator[Tweet]:
    """Streams tweets from a JSONL or TSV corpus file.

    Malformed lines increment ``stats.skipped``; if more than half of all
    non-empty lines fail to parse the stream ends with CorpusFormatError.
    """
    if fmt not in ("jsonl", "tsv"):
        raise ValueError(f"unknown corpus format {fmt!r}")
    stats = stats if stats is not None else LoadStats()
    own = isinstance(source, (str, Path))
    fh = open(source, "r", encoding="utf-8") if own else source
    try:
        if fmt == "tsv":
            header = fh.readline().rstrip("\n").split("\t")
            if header != TSV_COLUMNS:
                raise CorpusFormatError(
                    f"TSV corpus must start with header {TSV_COLUMNS}, got {header}"
                )
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                if fmt == "jsonl":
                    rec = json.loads(line)
                    if not isinstance(rec, dict):
                        raise ValueError("record is not an object")
                else:
                    fields = line.split("\t")
                    if len(fields) != len(TSV_COLUMNS):
                        raise ValueError("wrong column count")
                    rec = {
                        "id": unescape_field(fields[0]),
                        "text": unescape_field(fields[1]),
                        "lang": fields[2],
                        "created_at": fields[3],
                        "is_retweet": _parse_bool(fields[4]),
                        "has_url": _parse_bool(fields[5]),
                    }
                tweet = _tweet_from_record(rec)
            except (ValueError, KeyError, TypeError) as exc:
                stats.skipped += 1
                log.debug("skipping malformed line: %s", exc)
                continue
            stats.parsed += 1
            yield tweet
        total = stats.parsed + stats.skipped
        if total and stats.skipped > total / 2:
            raise CorpusFormatError(
                f"{stats.skipped} of {total} lines malformed; "
                f"input is probably not {fmt}"
            )
    finally:
        if own:
            fh.close()


def write_tweets_jsonl(path: str | Path, tweets: Iterable[Tweet]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in tweets:
            rec = {
                "id": t.id,
                "text": t.text,
                "lang": t.lang,
                "created_at": t.created_at.isoformat() if t.created_at else None,
                "is_retweet": t.is_retweet,
                "has_url": t.has_url,
            }
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    return n


def admit(tweet: Tweet, policy: FilterPolicy) -> bool:
    """Inclusion filter: language allowed, and no retweet/URL when dropped."""
    if tweet.lang not in policy.allowed_langs:
        return False
    if policy.drop_retweets and tweet.is_retweet:
        return False
    if policy.drop_url_tweets and tweet.has_url:
        return False
    return True


class ContextIndex:
    """Random-access tweet id -> text map, persisted as escaped TSV.

    Rebuilding from the same corpus yields a byte-identical file: rows are
    sorted by id and escaping is canonical.
    """

    def __init__(self, entries: dict[str, str] | None = None):
        self._texts: dict[str, str] = dict(entries or {})

    @classmethod
    def build(cls, tweets: Iterable[Tweet]) -> "ContextIndex":
        texts: dict[str, str] = {}
        for t in tweets:
            if t.id in texts:
                raise CorpusIntegrityError(f"duplicate tweet id {t.id!r}")
            texts[t.id] = t.text
        return cls(texts)

    def get(self, tweet_id: str) -> str | None:
        return self._texts.get(tweet_id)

    def __len__(self) -> int:
        return len(self._texts)

    def items(self) -> Iterator[tuple[str, str]]:
        return iter(self._texts.items())

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("id\ttext\n")
            for tid in sorted(self._texts):
                fh.write(f"{escape_field(tid)}\t{escape_field(self._texts[tid])}\n")

    @classmethod
    def load(cls, path: str | Path) -> "ContextIndex":
        texts: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != "id\ttext":
                raise CorpusFormatError(f"not a context index file: {path}")
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                tid_raw, text_raw = line.split("\t", 1)
                tid = unescape_field(tid_raw)
                if tid in texts:
                    raise CorpusIntegrityError(f"duplicate tweet id {tid!r}")
                texts[tid] = unescape_field(text_raw)
        return cls(texts)
