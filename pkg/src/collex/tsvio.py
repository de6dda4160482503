"""TSV reading/writing with field escaping.

Tabs, newlines and backslashes inside field values are escaped as \\t, \\n
and \\\\ so every record stays on one physical line and round-trips exactly.
Composite fields (semicolon- or colon-joined lists) additionally escape
their separator, so they must be split before being unescaped: writers
build each field with escape_field/join_list and readers take them apart
with unescape_field/split_list.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Iterator

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"t": "\t", "n": "\n", "r": "\r"}


def escape_field(value: str, extra: str = "") -> str:
    out = []
    for ch in value:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ch in extra:
            out.append("\\" + ch)
        else:
            out.append(ch)
    return "".join(out)


def unescape_field(value: str) -> str:
    if "\\" not in value:
        return value
    out = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "\\" and i + 1 < len(value):
            nxt = value[i + 1]
            out.append(_UNESCAPES.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def write_rows(path: str | Path, header: Iterable[str], rows: Iterable[Iterable[str]]) -> None:
    """Writes pre-escaped fields; callers escape with escape_field/join_list."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def read_rows(source: str | Path | io.TextIOBase, expect_header: list[str] | None = None
              ) -> Iterator[list[str]]:
    """Yields still-escaped field lists; the header row is validated, not yielded."""
    own = isinstance(source, (str, Path))
    fh = open(source, "r", encoding="utf-8") if own else source
    try:
        header_line = fh.readline()
        if expect_header is not None:
            got = header_line.rstrip("\n").split("\t")
            if got != list(expect_header):
                raise ValueError(f"unexpected header {got!r}, want {list(expect_header)!r}")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            yield line.split("\t")
    finally:
        if own:
            fh.close()


def join_list(values: Iterable[str], sep: str = ";") -> str:
    return sep.join(escape_field(v, extra=sep + ":") for v in values)


def split_escaped(value: str, sep: str) -> list[str]:
    """Splits on unescaped separators, leaving escape sequences intact."""
    parts: list[str] = []
    buf: list[str] = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "\\" and i + 1 < len(value):
            buf.append(ch + value[i + 1])
            i += 2
        elif ch == sep:
            parts.append("".join(buf))
            buf = []
            i += 1
        else:
            buf.append(ch)
            i += 1
    parts.append("".join(buf))
    return parts


def split_list(value: str, sep: str = ";") -> list[str]:
    if not value:
        return []
    return [unescape_field(p) for p in split_escaped(value, sep)]
