"""Tweet pre-cleaning and symptom mention extraction.

The extractor is pluggable: the reference implementation is a deterministic
gazetteer matcher (case-insensitive, token-boundary, leftmost-longest), and
RemoteExtractor adapts an external NER model served over HTTP. Both emit
EntityMention spans with offsets into the pre-cleaned text.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol

from .errors import ExtractionError, ResponseValidationError
from .textmatch import PhraseMatcher, normalize_phrase

log = logging.getLogger(__name__)

SYMPTOM = "SYMPTOM"

_TAG_RE = re.compile(r"<[^>]*>")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class EntityMention:
    tweet_id: str
    surface: str
    start: int
    end: int
    entity_type: str = SYMPTOM

    def validate(self, text: str) -> None:
        if not (0 <= self.start < self.end <= len(text)):
            raise ResponseValidationError(
                f"span [{self.start},{self.end}) out of bounds for text of "
                f"length {len(text)} (tweet {self.tweet_id})"
            )
        if text[self.start : self.end] != self.surface:
            raise ResponseValidationError(
                f"surface {self.surface!r} does not equal text slice "
                f"{text[self.start:self.end]!r} (tweet {self.tweet_id})"
            )


def load_emoji_map(path: str | Path) -> dict[str, str]:
    """Emoji table: one `emoji<TAB>alias` row per line, '#' comments allowed.

    The emoji column may be the literal character(s) or U+XXXX codepoint
    notation (space-separated for sequences).
    """
    mapping: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, alias = line.split("\t", 1)
            if key.upper().startswith("U+"):
                key = "".join(chr(int(part[2:], 16)) for part in key.split())
            mapping[key] = alias
    return mapping


def preclean_text(text: str, emoji_map: dict[str, str] | None = None) -> str:
    """Strips HTML tags, swaps mapped emoji for alias tokens, normalizes space.

    Idempotent; unmapped emoji pass through unchanged. Tags are replaced by a
    space so removal never glues adjacent words together.
    """
    prev = None
    while prev != text:
        prev = text
        text = _TAG_RE.sub(" ", text)
    if emoji_map:
        # longest keys first so ZWJ sequences win over their components
        for key in sorted(emoji_map, key=len, reverse=True):
            if key in text:
                text = text.replace(key, f" {emoji_map[key]} ")
    return _WS_RE.sub(" ", text).strip()


class Extractor(Protocol):
    def __call__(self, tweet_id: str, text: str) -> list[EntityMention]: ...


@dataclass(frozen=True)
class Gazetteer:
    terms: frozenset[str]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("gazetteer must not be empty")
        for term in self.terms:
            if not term or term != normalize_phrase(term):
                raise ValueError(f"term not pre-normalized: {term!r}")

    @classmethod
    def from_phrases(cls, phrases: Iterable[str]) -> "Gazetteer":
        return cls(frozenset(normalize_phrase(p) for p in phrases if p.strip()))

    @classmethod
    def load(cls, path: str | Path) -> "Gazetteer":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_phrases(line.rstrip("\n") for line in fh)


class GazetteerExtractor:
    """Reference extractor: every match is a SYMPTOM mention."""

    def __init__(self, gazetteer: Gazetteer):
        self.gazetteer = gazetteer
        self._matcher = PhraseMatcher((t, t) for t in gazetteer.terms)

    def __call__(self, tweet_id: str, text: str) -> list[EntityMention]:
        out = []
        for start, end, _key in self._matcher.find_spans(
            text, require_whitespace_gap=True
        ):
            out.append(EntityMention(tweet_id, text[start:end], start, end))
        return out


def gazetteer_extract(text: str, gazetteer: Gazetteer, tweet_id: str = "") -> list[EntityMention]:
    return GazetteerExtractor(gazetteer)(tweet_id, text)


def extract_entities(tweet_id: str, text: str, extractor: Extractor) -> list[EntityMention]:
    """Runs the extractor and validates every mention against the text."""
    mentions = extractor(tweet_id, text)
    for m in mentions:
        m.validate(text)
    return mentions


class RemoteExtractor:
    """HTTP adapter for an externally served NER model.

    Wire contract: POST {"text": ...} -> {"entities": [{"start", "end",
    "type"}]} with character offsets into the request text. Spans are
    validated before acceptance; transport failures surface as
    ExtractionError carrying the tweet id for retry.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        entity_type: str = SYMPTOM,
        max_in_flight: int = 8,
        post: Callable | None = None,
    ):
        if post is None:
            import requests

            post = requests.post
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self._post = post
        self.endpoint = endpoint
        self.timeout = timeout
        self.entity_type = entity_type
        self.max_in_flight = max_in_flight

    def __call__(self, tweet_id: str, text: str) -> list[EntityMention]:
        try:
            resp = self._post(
                self.endpoint, json={"text": text}, timeout=self.timeout
            )
            status = getattr(resp, "status_code", 200)
            if status != 200:
                raise ExtractionError(
                    f"extractor endpoint returned {status}", tweet_id=tweet_id
                )
            payload = resp.json()
        except ExtractionError:
            raise
        except Exception as exc:
            raise ExtractionError(
                f"extractor request failed: {exc}", tweet_id=tweet_id
            ) from exc
        try:
            entities = payload["entities"]
        except (TypeError, KeyError) as exc:
            raise ResponseValidationError(
                f"malformed extractor response: {json.dumps(payload)[:200]}"
            ) from exc
        mentions = []
        for ent in entities:
            if ent.get("type", self.entity_type) != self.entity_type:
                continue
            try:
                start, end = int(ent["start"]), int(ent["end"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ResponseValidationError(f"bad entity record: {ent!r}") from exc
            mention = EntityMention(
                tweet_id, text[start:end] if 0 <= start <= end <= len(text) else "",
                start, end, self.entity_type,
            )
            mention.validate(text)
            mentions.append(mention)
        return mentions

    def extract_many(
        self, items: Iterable[tuple[str, str]]
    ) -> dict[str, list[EntityMention]]:
        """Extracts a batch of (tweet_id, text) pairs concurrently.

        At most ``max_in_flight`` requests run at once. Results are keyed by
        tweet id, so callers get the same answer regardless of completion
        order; the first failure is re-raised after the batch drains (its
        tweet id rides on the error for retry).
        """
        from concurrent.futures import ThreadPoolExecutor

        items = list(items)
        results: dict[str, list[EntityMention]] = {}
        first_error: Exception | None = None
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            futures = {
                pool.submit(self, tweet_id, text): tweet_id for tweet_id, text in items
            }
            for future, tweet_id in futures.items():
                try:
                    results[tweet_id] = future.result()
                except Exception as exc:
                    if first_error is None:
                        first_error = exc
        if first_error is not None:
            raise first_error
        return results
