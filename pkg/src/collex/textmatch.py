"""Token-boundary multi-phrase matching.

Word characters are ASCII alphanumerics, the apostrophe, and any non-ASCII
letter; everything else is a boundary. A phrase matches where its token
sequence appears contiguously in the text's token sequence, so "fever"
never matches inside "feverish" but does match in "fever," or "FEVER!".

The matcher is a first-token-gated n-gram table rather than a trie: for
tweet-sized inputs the gate rejects almost every position with one set
lookup, which keeps matching well above the pipeline's throughput floor.
"""

from __future__ import annotations

import re
from typing import Iterable, Iterator

# One token = maximal run of word characters. [^\W\d_] is "unicode letter";
# ASCII digits and the apostrophe are added explicitly (unicode digits are
# boundaries, matching the extraction offset rules).
WORD_RUN = re.compile(r"(?:[0-9']|[^\W\d_])+")


def word_tokens(text: str) -> list[str]:
    return WORD_RUN.findall(text)


def token_spans(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in WORD_RUN.finditer(text)]


def phrase_key(phrase: str) -> tuple[str, ...]:
    """Canonical token sequence of a phrase: per-token lowercase."""
    return tuple(t.lower() for t in word_tokens(phrase))


def normalize_phrase(phrase: str) -> str:
    """Lowercase, single-spaced form used for stored terms."""
    return " ".join(phrase_key(phrase))


class PhraseMatcher:
    """Matches a fixed set of phrases against texts, token-aligned.

    Each phrase carries a payload (e.g. a concept id); a phrase may be
    registered more than once with different payloads.
    """

    def __init__(self, entries: Iterable[tuple[str, object]] = ()):
        self._payloads: dict[tuple[str, ...], set] = {}
        self._by_first: dict[str, list[tuple[tuple[str, ...], int]]] = {}
        for phrase, payload in entries:
            self.add(phrase, payload)

    def add(self, phrase: str, payload: object) -> None:
        key = phrase_key(phrase)
        if not key:
            raise ValueError(f"phrase has no word tokens: {phrase!r}")
        if key not in self._payloads:
            self._payloads[key] = set()
            bucket = self._by_first.setdefault(key[0], [])
            bucket.append((key, len(key)))
            bucket.sort(key=lambda kl: -kl[1])
        self._payloads[key].add(payload)

    def __len__(self) -> int:
        return len(self._payloads)

    def payload_sets(self) -> Iterator[tuple[tuple[str, ...], set]]:
        return iter(self._payloads.items())

    def matched_payloads(self, text: str) -> set:
        """All payloads whose phrase occurs anywhere in the text.

        Pure containment: overlapping and nested occurrences all count,
        punctuation between tokens is transparent.
        """
        toks = WORD_RUN.findall(text.lower())
        n = len(toks)
        by_first = self._by_first
        payloads = self._payloads
        hits: set = set()
        for i, tok in enumerate(toks):
            bucket = by_first.get(tok)
            if bucket is None:
                continue
            for key, length in bucket:
                if i + length <= n and tuple(toks[i : i + length]) == key:
                    hits |= payloads[key]
        return hits

    def find_spans(
        self, text: str, require_whitespace_gap: bool = False
    ) -> list[tuple[int, int, tuple[str, ...]]]:
        """Leftmost-longest, non-overlapping matches with char offsets.

        With ``require_whitespace_gap`` a multi-token phrase only matches
        when nothing but whitespace separates its tokens in the text, so
        the matched slice space-normalizes back to the stored phrase.
        """
        spans = token_spans(text)
        toks = [text[a:b].lower() for a, b in spans]
        n = len(toks)
        by_first = self._by_first
        out = []
        i = 0
        while i < n:
            bucket = by_first.get(toks[i])
            matched = 0
            if bucket is not None:
                for key, length in bucket:
                    if i + length > n or tuple(toks[i : i + length]) != key:
                        continue
                    if require_whitespace_gap and length > 1:
                        gaps_ok = all(
                            text[spans[k][1] : spans[k + 1][0]].isspace()
                            for k in range(i, i + length - 1)
                        )
                        if not gaps_ok:
                            continue
                    out.append((spans[i][0], spans[i + length - 1][1], key))
                    matched = length
                    break
            i += matched if matched else 1
        return out
