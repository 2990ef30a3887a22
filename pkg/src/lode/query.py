"""SELECT query subset: basic graph patterns, comparison filters, LIMIT.

Evaluation is set semantics over full variable assignments, matching
across all named graphs plus the default graph.  Rows are sorted by the
canonical serialization of the projected bindings before LIMIT, so equal
stores always produce identical result tables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from typing import Optional, Union

from .rdf import (
    RDF_TYPE,
    XSD_DECIMAL,
    XSD_INTEGER,
    QuadStore,
    Term,
    TermError,
    format_term,
    iri,
    literal,
)
from .rdfio import ParseError, _Cursor, _scan_iri, _scan_langtag, _scan_string

_UNSUPPORTED = {
    "OPTIONAL",
    "UNION",
    "MINUS",
    "GRAPH",
    "ORDER",
    "GROUP",
    "HAVING",
    "OFFSET",
    "ASK",
    "CONSTRUCT",
    "DESCRIBE",
    "BIND",
    "VALUES",
    "SERVICE",
    "EXISTS",
    "INSERT",
    "DELETE",
    "REDUCED",
}

_OPS = ("<=", ">=", "!=", "=", "<", ">")
_DECIMAL_RE = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)$")
_WORD_CHARS = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-"
)


@dataclass(frozen=True, slots=True)
class Variable:
    name: str


PatternTerm = Union[Term, Variable]
TriplePattern = tuple[PatternTerm, PatternTerm, PatternTerm]


@dataclass(frozen=True, slots=True)
class Comparison:
    """FILTER clause comparing a variable to a constant or variable."""

    left: Variable
    op: str
    right: PatternTerm


@dataclass(frozen=True, slots=True)
class Query:
    variables: tuple[str, ...]
    select_all: bool
    distinct: bool
    patterns: tuple[TriplePattern, ...]
    filters: tuple[Comparison, ...]
    limit: Optional[int]

    def projected(self) -> tuple[str, ...]:
        if not self.select_all:
            return self.variables
        seen: list[str] = []
        for pattern in self.patterns:
            for part in pattern:
                if isinstance(part, Variable) and part.name not in seen:
                    seen.append(part.name)
        return tuple(seen)


class _QueryScanner:
    def __init__(self, text: str):
        self.cur = _Cursor(text)
        self.prefixes: dict[str, str] = {}

    def skip(self) -> None:
        self.cur.skip_ws(newlines=True)

    def eof(self) -> bool:
        self.skip()
        return self.cur.eof()

    def error(self, message: str, line: int = 0, col: int = 0) -> ParseError:
        return self.cur.error(message, line, col)

    def peek_word(self) -> str:
        """Upcoming bare word without consuming it; '' when none."""
        self.skip()
        text, pos = self.cur.text, self.cur.pos
        end = pos
        while end < len(text) and text[end] in _WORD_CHARS:
            end += 1
        word = text[pos:end]
        if word and (end >= len(text) or text[end] != ":"):
            return word
        return ""

    def take_word(self) -> str:
        word = self.peek_word()
        for _ in word:
            self.cur.advance()
        return word

    def check_unsupported(self, word: str) -> None:
        if word.upper() in _UNSUPPORTED:
            raise self.error(f"unsupported feature: {word.upper()}")

    def punct(self, token: str) -> bool:
        self.skip()
        if self.cur.text.startswith(token, self.cur.pos):
            for _ in token:
                self.cur.advance()
            return True
        return False

    def expect(self, token: str) -> None:
        if not self.punct(token):
            raise self.error(f"expected {token!r}")

    def variable(self) -> Optional[Variable]:
        self.skip()
        if self.cur.peek() != "?":
            return None
        line, col = self.cur.line, self.cur.col
        self.cur.advance()
        start = self.cur.pos
        while not self.cur.eof() and self.cur.peek() in _WORD_CHARS:
            self.cur.advance()
        name = self.cur.text[start : self.cur.pos]
        if not name:
            raise self.error("empty variable name", line, col)
        return Variable(name)

    def iri_ahead(self) -> bool:
        """'<' starts an IRI only when an unbroken <...> token follows."""
        text, pos = self.cur.text, self.cur.pos
        if pos >= len(text) or text[pos] != "<":
            return False
        end = pos + 1
        while end < len(text) and not text[end].isspace() and text[end] != ">":
            end += 1
        return end < len(text) and text[end] == ">"

    def number(self) -> Optional[Term]:
        self.skip()
        text, pos = self.cur.text, self.cur.pos
        end = pos
        if end < len(text) and text[end] in "+-":
            end += 1
        digits = end
        while end < len(text) and (text[end].isdigit() or text[end] == "."):
            end += 1
        lexical = text[pos:end]
        if end == digits or not _DECIMAL_RE.fullmatch(lexical):
            return None
        for _ in lexical:
            self.cur.advance()
        datatype = XSD_DECIMAL if "." in lexical else XSD_INTEGER
        return literal(lexical, datatype=datatype)

    def term(self) -> Optional[Term]:
        """IRI, prefixed name, literal or number; None when nothing matches."""
        self.skip()
        cur = self.cur
        line, col = cur.line, cur.col
        if self.iri_ahead():
            return _scan_iri(cur)
        if cur.peek() == '"':
            lexical = _scan_string(cur)
            if cur.peek() == "@":
                return literal(lexical, lang=_scan_langtag(cur))
            if cur.text.startswith("^^", cur.pos):
                cur.advance()
                cur.advance()
                if not self.iri_ahead():
                    raise self.error("expected datatype IRI after '^^'")
                dt = _scan_iri(cur)
                try:
                    return literal(lexical, datatype=dt.value)
                except TermError as exc:
                    raise self.error(str(exc), line, col) from None
            return literal(lexical)
        numeric = self.number()
        if numeric is not None:
            return numeric
        return self._pname()

    def _pname(self) -> Optional[Term]:
        cur = self.cur
        line, col = cur.line, cur.col
        text, pos = cur.text, cur.pos
        end = pos
        while end < len(text) and text[end] in _WORD_CHARS:
            end += 1
        if end >= len(text) or text[end] != ":":
            return None
        prefix = text[pos:end]
        for _ in range(end - pos + 1):
            cur.advance()
        start = cur.pos
        while not cur.eof() and cur.peek() in _WORD_CHARS:
            cur.advance()
        local = text[start : cur.pos]
        if prefix not in self.prefixes:
            raise self.error(f"undefined prefix '{prefix}:'", line, col)
        try:
            return iri(self.prefixes[prefix] + local)
        except TermError as exc:
            raise self.error(str(exc), line, col) from None

    def pname_ns(self) -> str:
        self.skip()
        cur = self.cur
        line, col = cur.line, cur.col
        start = cur.pos
        while not cur.eof() and cur.peek() in _WORD_CHARS:
            cur.advance()
        if cur.peek() != ":":
            raise self.error("expected prefix name ending in ':'", line, col)
        name = cur.text[start : cur.pos]
        cur.advance()
        return name


def parse_query(text: str) -> Query:
    """Parse one SELECT query; anything outside the subset is an error."""
    sc = _QueryScanner(text)

    while True:
        word = sc.peek_word()
        if word.upper() != "PREFIX":
            break
        sc.take_word()
        name = sc.pname_ns()
        sc.skip()
        if not sc.iri_ahead():
            raise sc.error("expected IRI in PREFIX")
        sc.prefixes[name] = _scan_iri(sc.cur).value

    word = sc.take_word()
    sc.check_unsupported(word)
    if word.upper() != "SELECT":
        raise sc.error("expected SELECT")

    distinct = False
    if sc.peek_word().upper() == "DISTINCT":
        sc.take_word()
        distinct = True

    select_all = False
    variables: list[tuple[Variable, int, int]] = []
    if sc.punct("*"):
        select_all = True
    else:
        while True:
            sc.skip()
            line, col = sc.cur.line, sc.cur.col
            var = sc.variable()
            if var is None:
                break
            variables.append((var, line, col))
        if not variables:
            raise sc.error("expected variables or '*' after SELECT")

    word = sc.take_word()
    sc.check_unsupported(word)
    if word.upper() != "WHERE":
        raise sc.error("expected WHERE")
    sc.expect("{")

    patterns: list[TriplePattern] = []
    filters: list[tuple[Comparison, int, int]] = []
    while True:
        if sc.punct("}"):
            break
        if sc.eof():
            raise sc.error("expected '}'")
        word = sc.peek_word()
        if word and word.upper() == "FILTER":
            sc.take_word()
            filters.append(_parse_filter(sc))
            sc.punct(".")
            continue
        if word and word != "a":
            sc.check_unsupported(word)
        patterns.append(_parse_pattern(sc))
        sc.expect(".")

    limit: Optional[int] = None
    if not sc.eof():
        word = sc.take_word()
        sc.check_unsupported(word)
        if word.upper() != "LIMIT":
            raise sc.error("expected LIMIT or end of query")
        sc.skip()
        line, col = sc.cur.line, sc.cur.col
        num = sc.number()
        if num is None or num.datatype != XSD_INTEGER or num.value[0] in "+-":
            raise sc.error("LIMIT takes a non-negative integer", line, col)
        limit = int(num.value)
        if not sc.eof():
            raise sc.error("unexpected input after LIMIT")

    pattern_vars = {
        part.name
        for pattern in patterns
        for part in pattern
        if isinstance(part, Variable)
    }
    for var, line, col in variables:
        if var.name not in pattern_vars:
            raise ParseError(
                line, col, f"projected variable not in pattern: ?{var.name}"
            )
    checked_filters = []
    for comp, line, col in filters:
        for side in (comp.left, comp.right):
            if isinstance(side, Variable) and side.name not in pattern_vars:
                raise ParseError(
                    line, col, f"filter variable not in pattern: ?{side.name}"
                )
        checked_filters.append(comp)

    return Query(
        variables=tuple(v.name for v, _, _ in variables),
        select_all=select_all,
        distinct=distinct,
        patterns=tuple(patterns),
        filters=tuple(checked_filters),
        limit=limit,
    )


def _pattern_part(sc: _QueryScanner, predicate: bool = False) -> PatternTerm:
    var = sc.variable()
    if var is not None:
        return var
    if predicate and sc.peek_word() == "a":
        sc.take_word()
        return iri(RDF_TYPE)
    word = sc.peek_word()
    if word:
        sc.check_unsupported(word)
    sc.skip()
    line, col = sc.cur.line, sc.cur.col
    term = sc.term()
    if term is None:
        raise sc.error("expected a term or variable", line, col)
    if predicate and term.kind != "iri":
        raise sc.error("predicate must be an IRI", line, col)
    return term


def _parse_pattern(sc: _QueryScanner) -> TriplePattern:
    s = _pattern_part(sc)
    if isinstance(s, Term) and s.kind == "literal":
        raise sc.error("subject cannot be a literal")
    p = _pattern_part(sc, predicate=True)
    o = _pattern_part(sc)
    return (s, p, o)


def _parse_filter(sc: _QueryScanner) -> tuple[Comparison, int, int]:
    sc.expect("(")
    sc.skip()
    line, col = sc.cur.line, sc.cur.col
    left = sc.variable()
    if left is None:
        raise sc.error("filter must compare a variable", line, col)
    sc.skip()
    op = next((c for c in _OPS if sc.cur.text.startswith(c, sc.cur.pos)), None)
    if op is None:
        raise sc.error("expected comparison operator")
    for _ in op:
        sc.cur.advance()
    right: Optional[PatternTerm] = sc.variable()
    if right is None:
        right = sc.term()
    if right is None:
        raise sc.error("expected a term or variable after operator")
    sc.expect(")")
    return Comparison(left, op, right), line, col


def compare_terms(left: Term, right: Term, op: str) -> bool:
    """Numeric comparison when both lexical forms are decimals, else bytewise."""
    a, b = left.value, right.value
    if _DECIMAL_RE.fullmatch(a) and _DECIMAL_RE.fullmatch(b):
        va, vb = Decimal(a), Decimal(b)
    else:
        va, vb = a, b
    if op == "=":
        return va == vb
    if op == "!=":
        return va != vb
    if op == "<":
        return va < vb
    if op == "<=":
        return va <= vb
    if op == ">":
        return va > vb
    return va >= vb


def _extend(
    binding: dict[str, Term], pattern: TriplePattern, parts: tuple[Term, Term, Term]
) -> Optional[dict[str, Term]]:
    out = binding
    for slot, value in zip(pattern, parts):
        if isinstance(slot, Variable):
            bound = out.get(slot.name)
            if bound is None:
                if out is binding:
                    out = dict(binding)
                out[slot.name] = value
            elif bound != value:
                return None
    return out if out is not binding else dict(binding)


def evaluate(store: QuadStore, query: Query) -> list[dict[str, Term]]:
    """Solve the query against the store; the store is never modified."""
    bindings: list[dict[str, Term]] = [{}]
    for pattern in query.patterns:
        extended: list[dict[str, Term]] = []
        seen: set[frozenset] = set()
        for binding in bindings:
            lookup = [
                binding.get(part.name) if isinstance(part, Variable) else part
                for part in pattern
            ]
            for quad in store.match(lookup[0], lookup[1], lookup[2], None):
                candidate = _extend(binding, pattern, (quad.s, quad.p, quad.o))
                if candidate is None:
                    continue
                key = frozenset(candidate.items())
                if key not in seen:
                    seen.add(key)
                    extended.append(candidate)
        bindings = extended
        if not bindings:
            break

    for comp in query.filters:
        kept = []
        for binding in bindings:
            left = binding[comp.left.name]
            right = (
                binding[comp.right.name]
                if isinstance(comp.right, Variable)
                else comp.right
            )
            if compare_terms(left, right, comp.op):
                kept.append(binding)
        bindings = kept

    projected = query.projected()
    rows = [tuple(binding[name] for name in projected) for binding in bindings]
    if query.distinct:
        rows = list(dict.fromkeys(rows))
    rows.sort(key=lambda row: tuple(format_term(term) for term in row))
    if query.limit is not None:
        rows = rows[: query.limit]
    return [dict(zip(projected, row)) for row in rows]
