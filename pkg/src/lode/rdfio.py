"""Text codecs for the store: N-Quads / N-Triples and a Turtle subset.

The N-Quads serializer is canonical (sorted, deduplicated, trailing
newline) so equal stores produce identical bytes.  Parsers fail on the
first error with a 1-based line/column position and never hand back a
partial document.  Blank node labels keep their document-local identity
but are prefixed with a per-document nonce so labels from different
documents can never collide inside one store.
"""

from __future__ import annotations

import uuid
from pathlib import Path
from typing import Iterable, Optional

from .rdf import (
    DEFAULT_GRAPH,
    RDF_TYPE,
    Quad,
    Term,
    TermError,
    blank,
    format_quad,
    iri,
    literal,
)

_WS = " \t"
_HEX = "0123456789abcdefABCDEF"
_LABEL_CHARS = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_"
)
_PNAME_CHARS = _LABEL_CHARS | {"-"}


class ParseError(Exception):
    """Parse failure at a 1-based line/column, with a short input fragment."""

    def __init__(self, line: int, column: int, message: str, fragment: str = ""):
        self.line = line
        self.column = column
        self.message = message
        self.fragment = fragment[:40]
        super().__init__(f"{line}:{column}: {message}")


def _fragment(text: str, pos: int) -> str:
    return text[pos : pos + 40]


def decode_document(data: bytes) -> str:
    """Decode UTF-8 input; a BOM or an invalid byte is a parse error."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        prefix = data[: exc.start].decode("utf-8", errors="replace")
        line = prefix.count("\n") + 1
        column = len(prefix) - (prefix.rfind("\n") + 1) + 1
        raise ParseError(line, column, "invalid UTF-8 byte") from None
    if text.startswith("﻿"):
        raise ParseError(1, 1, "byte order mark not allowed", _fragment(text, 0))
    return text


def _new_nonce() -> str:
    return "b" + uuid.uuid4().hex[:8] + "_"


class _Cursor:
    """Character cursor over one document with line/column bookkeeping."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def error(self, message: str, line: int = 0, col: int = 0) -> ParseError:
        return ParseError(
            line or self.line,
            col or self.col,
            message,
            _fragment(self.text, self.pos),
        )

    def skip_ws(self, newlines: bool) -> None:
        while not self.eof():
            ch = self.peek()
            if ch in _WS or (newlines and ch in "\r\n"):
                self.advance()
            elif ch == "#":
                while not self.eof() and self.peek() != "\n":
                    self.advance()
            else:
                return


def _scan_iri(cur: _Cursor) -> Term:
    line, col = cur.line, cur.col
    cur.advance()  # consume '<'
    start = cur.pos
    while not cur.eof() and cur.peek() not in ">\n":
        cur.advance()
    if cur.eof() or cur.peek() == "\n":
        raise cur.error("unterminated IRI", line, col)
    value = cur.text[start : cur.pos]
    cur.advance()  # consume '>'
    try:
        return iri(value)
    except TermError as exc:
        raise cur.error(str(exc), line, col) from None


def _scan_string(cur: _Cursor) -> str:
    line, col = cur.line, cur.col
    cur.advance()  # consume opening quote
    out: list[str] = []
    while True:
        if cur.eof() or cur.peek() == "\n":
            raise cur.error("unterminated string", line, col)
        ch = cur.advance()
        if ch == '"':
            return "".join(out)
        if ch != "\\":
            out.append(ch)
            continue
        if cur.eof():
            raise cur.error("unterminated string", line, col)
        esc_line, esc_col = cur.line, cur.col - 1
        esc = cur.advance()
        if esc == '"':
            out.append('"')
        elif esc == "\\":
            out.append("\\")
        elif esc == "n":
            out.append("\n")
        elif esc == "t":
            out.append("\t")
        elif esc == "r":
            out.append("\r")
        elif esc == "u":
            digits = cur.text[cur.pos : cur.pos + 4]
            if len(digits) < 4 or any(d not in _HEX for d in digits):
                raise cur.error("bad \\u escape", esc_line, esc_col)
            for _ in range(4):
                cur.advance()
            out.append(chr(int(digits, 16)))
        else:
            raise cur.error(f"unknown escape \\{esc}", esc_line, esc_col)


def _scan_langtag(cur: _Cursor) -> str:
    line, col = cur.line, cur.col
    cur.advance()  # consume '@'
    start = cur.pos
    while not cur.eof() and (cur.peek().isalnum() or cur.peek() == "-"):
        cur.advance()
    tag = cur.text[start : cur.pos]
    if not tag or tag[0] == "-":
        raise cur.error("bad language tag", line, col)
    return tag


def _scan_blank_label(cur: _Cursor) -> str:
    line, col = cur.line, cur.col
    cur.advance()  # '_'
    if cur.peek() != ":":
        raise cur.error("expected ':' after '_'", line, col)
    cur.advance()
    start = cur.pos
    while not cur.eof() and cur.peek() in _LABEL_CHARS:
        cur.advance()
    label = cur.text[start : cur.pos]
    if not label:
        raise cur.error("empty blank node label", line, col)
    return label


class _BlankScope:
    """Maps document-local labels to store labels under one nonce."""

    def __init__(self, prefix: Optional[str]):
        self.prefix = _new_nonce() if prefix is None else prefix

    def term(self, label: str) -> Term:
        return blank(self.prefix + label)


def _nquads_term(cur: _Cursor, scope: _BlankScope, position: str) -> Term:
    line, col = cur.line, cur.col
    ch = cur.peek()
    if ch == "<":
        return _scan_iri(cur)
    if ch == "_":
        if position in ("predicate", "graph"):
            raise cur.error(f"{position} must be an IRI", line, col)
        return _scan_blank_label_term(cur, scope)
    if ch == '"':
        if position != "object":
            raise cur.error(f"{position} cannot be a literal", line, col)
        lexical = _scan_string(cur)
        if cur.peek() == "@":
            return literal(lexical, lang=_scan_langtag(cur))
        if cur.text.startswith("^^", cur.pos):
            cur.advance()
            cur.advance()
            if cur.peek() != "<":
                raise cur.error("expected '<' after '^^'")
            dt = _scan_iri(cur)
            try:
                return literal(lexical, datatype=dt.value)
            except TermError as exc:
                raise cur.error(str(exc), line, col) from None
        return literal(lexical)
    raise cur.error(f"expected {position} term", line, col)


def _scan_blank_label_term(cur: _Cursor, scope: _BlankScope) -> Term:
    line, col = cur.line, cur.col
    label = _scan_blank_label(cur)
    try:
        return scope.term(label)
    except TermError as exc:
        raise cur.error(str(exc), line, col) from None


def parse_nquads(text: str, blank_prefix: Optional[str] = None) -> list[Quad]:
    """Parse N-Quads (N-Triples is the 3-term case); one statement per line.

    Triples land in the default graph.  blank_prefix overrides the
    per-document nonce; pass "" to keep labels verbatim.
    """
    if text.startswith("﻿"):
        raise ParseError(1, 1, "byte order mark not allowed", _fragment(text, 0))
    scope = _BlankScope(blank_prefix)
    cur = _Cursor(text)
    quads: list[Quad] = []
    while True:
        cur.skip_ws(newlines=True)
        if cur.eof():
            return quads
        terms: list[Term] = []
        positions = ("subject", "predicate", "object", "graph")
        while True:
            cur.skip_ws(newlines=False)
            if cur.peek() == ".":
                cur.advance()
                break
            if cur.eof() or cur.peek() == "\n":
                raise cur.error("expected '.'")
            if len(terms) == 4:
                raise cur.error("expected '.' after graph term")
            terms.append(_nquads_term(cur, scope, positions[len(terms)]))
        if len(terms) < 3:
            raise cur.error("statement needs 3 or 4 terms")
        graph = terms[3] if len(terms) == 4 else DEFAULT_GRAPH
        quads.append(Quad(terms[0], terms[1], terms[2], graph))
        cur.skip_ws(newlines=False)
        if not cur.eof() and cur.peek() != "\n":
            raise cur.error("one statement per line")


def serialize_nquads(quads: Iterable[Quad]) -> str:
    """Canonical N-Quads: sorted unique statements, trailing newline."""
    lines = sorted({format_quad(q) for q in quads})
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


class _TurtleParser:
    """Subset reader: @prefix, prefixed names, 'a', ';' and ',' lists."""

    def __init__(self, text: str, blank_prefix: Optional[str]):
        self.cur = _Cursor(text)
        self.scope = _BlankScope(blank_prefix)
        self.prefixes: dict[str, str] = {}
        self.quads: list[Quad] = []

    def parse(self) -> list[Quad]:
        cur = self.cur
        while True:
            cur.skip_ws(newlines=True)
            if cur.eof():
                return self.quads
            if self.cur.text.startswith("@prefix", cur.pos):
                self._prefix_decl()
            else:
                self._triples()

    def _prefix_decl(self) -> None:
        cur = self.cur
        for _ in range(len("@prefix")):
            cur.advance()
        cur.skip_ws(newlines=True)
        name = self._pname_ns()
        cur.skip_ws(newlines=True)
        if cur.peek() != "<":
            raise cur.error("expected IRI in @prefix")
        target = _scan_iri(cur)
        cur.skip_ws(newlines=True)
        if cur.peek() != ".":
            raise cur.error("expected '.' after @prefix")
        cur.advance()
        self.prefixes[name] = target.value

    def _pname_ns(self) -> str:
        cur = self.cur
        line, col = cur.line, cur.col
        start = cur.pos
        while not cur.eof() and cur.peek() in _PNAME_CHARS:
            cur.advance()
        if cur.peek() != ":":
            raise cur.error("expected prefix name ending in ':'", line, col)
        name = cur.text[start : cur.pos]
        cur.advance()
        return name

    def _triples(self) -> None:
        cur = self.cur
        subject = self._term(allow_literal=False)
        while True:
            cur.skip_ws(newlines=True)
            predicate = self._verb()
            while True:
                cur.skip_ws(newlines=True)
                obj = self._term(allow_literal=True)
                self.quads.append(Quad(subject, predicate, obj))
                cur.skip_ws(newlines=True)
                if cur.peek() == ",":
                    cur.advance()
                    continue
                break
            if cur.peek() == ";":
                cur.advance()
                cur.skip_ws(newlines=True)
                if cur.peek() in ".;":
                    while cur.peek() == ";":
                        cur.advance()
                        cur.skip_ws(newlines=True)
                if cur.peek() == ".":
                    cur.advance()
                    return
                continue
            if cur.peek() == ".":
                cur.advance()
                return
            raise cur.error("expected ',', ';' or '.'")

    def _verb(self) -> Term:
        cur = self.cur
        line, col = cur.line, cur.col
        if cur.peek() == "a" and self._keyword_a_ahead():
            cur.advance()
            return iri(RDF_TYPE)
        if cur.peek() in ('"', "_"):
            raise cur.error("predicate must be an IRI", line, col)
        term = self._term(allow_literal=False)
        if term.kind != "iri":
            raise cur.error("predicate must be an IRI", line, col)
        return term

    def _keyword_a_ahead(self) -> bool:
        # Distinguishes the bare 'a' keyword from a prefixed name like a:x.
        text, pos = self.cur.text, self.cur.pos
        nxt = text[pos + 1] if pos + 1 < len(text) else ""
        return nxt not in _PNAME_CHARS and nxt != ":"

    def _term(self, allow_literal: bool) -> Term:
        cur = self.cur
        line, col = cur.line, cur.col
        ch = cur.peek()
        if ch == "<":
            return _scan_iri(cur)
        if ch == "_":
            return _scan_blank_label_term(cur, self.scope)
        if ch == '"':
            if not allow_literal:
                raise cur.error("literal not allowed here", line, col)
            lexical = _scan_string(cur)
            if cur.peek() == "@":
                return literal(lexical, lang=_scan_langtag(cur))
            if cur.text.startswith("^^", cur.pos):
                cur.advance()
                cur.advance()
                if cur.peek() == "<":
                    dt = _scan_iri(cur).value
                else:
                    dt = self._resolve_pname()
                try:
                    return literal(lexical, datatype=dt)
                except TermError as exc:
                    raise cur.error(str(exc), line, col) from None
            return literal(lexical)
        if ch in _PNAME_CHARS or ch == ":":
            return iri(self._resolve_pname())
        if cur.eof():
            raise cur.error("unexpected end of input")
        raise cur.error(f"stray character {ch!r}", line, col)

    def _resolve_pname(self) -> str:
        cur = self.cur
        line, col = cur.line, cur.col
        start = cur.pos
        while not cur.eof() and cur.peek() in _PNAME_CHARS:
            cur.advance()
        if cur.peek() != ":":
            raise cur.error("expected ':' in prefixed name", line, col)
        prefix = cur.text[start : cur.pos]
        cur.advance()
        local_start = cur.pos
        while not cur.eof() and cur.peek() in _PNAME_CHARS:
            cur.advance()
        local = cur.text[local_start : cur.pos]
        if prefix not in self.prefixes:
            raise cur.error(f"undefined prefix '{prefix}:'", line, col)
        full = self.prefixes[prefix] + local
        try:
            _probe = iri(full)
        except TermError as exc:
            raise cur.error(str(exc), line, col) from None
        return full


def parse_turtle(text: str, blank_prefix: Optional[str] = None) -> list[Quad]:
    """Parse the Turtle subset; every triple goes to the default graph."""
    if text.startswith("﻿"):
        raise ParseError(1, 1, "byte order mark not allowed", _fragment(text, 0))
    return _TurtleParser(text, blank_prefix).parse()


_SUFFIX_PARSERS = {
    ".nq": parse_nquads,
    ".nt": parse_nquads,
    ".ttl": parse_turtle,
}


def read_rdf_file(path: str | Path) -> list[Quad]:
    """Load one RDF document, choosing the codec by file suffix."""
    path = Path(path)
    parser = _SUFFIX_PARSERS.get(path.suffix)
    if parser is None:
        raise ValueError(f"unsupported RDF file suffix: {path.suffix!r}")
    return parser(decode_document(path.read_bytes()))
