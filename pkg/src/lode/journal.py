"""Durability: an append-only journal of quad insertions and removals.

Each line is '+' or '-', a space, and one N-Quads statement.  A mutation
group is written, flushed and fsynced before the caller acknowledges it,
so every acknowledged group survives a crash.  Replay applies lines in
order with set semantics; a torn trailing line fails replay rather than
yielding a silently partial store.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable

from .rdf import Quad, QuadStore, format_quad
from .rdfio import ParseError, parse_nquads


class JournalError(Exception):
    """Journal file unusable; carries the offending 1-based line if known."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(message)


class Journal:
    """Writer handle; one instance owns the file while the service runs."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8", newline="\n")

    def append(self, entries: Iterable[tuple[str, Quad]]) -> None:
        """Write one mutation group durably; callers see it all or nothing
        on replay only up to line granularity, so groups stay small."""
        lines = []
        for op, quad in entries:
            if op not in "+-":
                raise ValueError(f"journal op must be '+' or '-', got {op!r}")
            lines.append(f"{op} {format_quad(quad)}\n")
        if not lines:
            return
        self._fh.write("".join(lines))
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "Journal":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def replay_journal(path: str | Path) -> QuadStore:
    """Rebuild the store from the journal; a missing file is an empty store."""
    store = QuadStore()
    path = Path(path)
    if not path.exists():
        return store
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                raise JournalError(f"line {lineno}: empty journal line", lineno)
            op, sep, statement = line[0], line[1:2], line[2:]
            if op not in "+-" or sep != " ":
                raise JournalError(
                    f"line {lineno}: expected '+ ' or '- ' prefix", lineno
                )
            try:
                quads = parse_nquads(statement, blank_prefix="")
            except ParseError as exc:
                raise JournalError(
                    f"line {lineno}: {exc.message}", lineno
                ) from None
            if len(quads) != 1:
                raise JournalError(
                    f"line {lineno}: expected exactly one statement", lineno
                )
            if op == "+":
                store.insert(quads[0])
            else:
                store.remove(quads[0])
    return store


def compact_journal(path: str | Path, store: QuadStore) -> int:
    """Rewrite the journal as plain insertions of the store's content.

    The replacement is atomic: the new file is fsynced and renamed over
    the old one, so a crash leaves either journal intact.
    """
    path = Path(path)
    tmp = path.with_name(path.name + ".compact")
    quads = store.quads()
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        for quad in quads:
            fh.write(f"+ {format_quad(quad)}\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return len(quads)
