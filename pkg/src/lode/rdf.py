"""RDF term model and an indexed in-memory quad store.

Terms are immutable values.  The store keeps set semantics over quads,
indexes every position, and answers arbitrary (s, p, o, g) patterns.
Everything that leaves the store is ordered by the canonical statement
serialization so downstream output is reproducible byte for byte.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"

RDF_TYPE = RDF_NS + "type"
RDF_LANG_STRING = RDF_NS + "langString"
XSD_STRING = XSD_NS + "string"
XSD_INTEGER = XSD_NS + "integer"
XSD_DECIMAL = XSD_NS + "decimal"
XSD_DATETIME = XSD_NS + "dateTime"

# Quads addressed to no named graph land here.
DEFAULT_GRAPH_IRI = "urn:x-lode:default-graph"

_BLANK_CHARS = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_"
)


class TermError(ValueError):
    """A term or quad violates its structural rules."""


@dataclass(frozen=True, slots=True)
class Term:
    """One RDF node: kind is 'iri', 'literal' or 'blank'.

    For literals the datatype is always set and lang is present exactly
    when the datatype is rdf:langString.  Language tags compare
    case-insensitively, so they are folded to lowercase on construction.
    """

    kind: str
    value: str
    datatype: Optional[str] = None
    lang: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind == "iri":
            _check_iri(self.value)
            if self.datatype is not None or self.lang is not None:
                raise TermError("IRI terms take no datatype or language")
        elif self.kind == "literal":
            if self.datatype is None:
                raise TermError("literal terms need a datatype")
            _check_iri(self.datatype)
            if self.lang is not None:
                if self.datatype != RDF_LANG_STRING:
                    raise TermError("language tag requires rdf:langString")
                if not self.lang:
                    raise TermError("empty language tag")
                object.__setattr__(self, "lang", self.lang.lower())
            elif self.datatype == RDF_LANG_STRING:
                raise TermError("rdf:langString requires a language tag")
        elif self.kind == "blank":
            if not self.value:
                raise TermError("empty blank node label")
            if not _BLANK_CHARS.issuperset(self.value):
                raise TermError("blank node label must be alphanumeric or '_'")
            if self.datatype is not None or self.lang is not None:
                raise TermError("blank terms take no datatype or language")
        else:
            raise TermError(f"unknown term kind: {self.kind!r}")


def _check_iri(value: str) -> None:
    if not value:
        raise TermError("empty IRI")
    if any(c.isspace() for c in value):
        raise TermError(f"whitespace in IRI: {value!r}")
    if ":" not in value:
        raise TermError(f"missing ':' in IRI: {value!r}")
    # Unescaped angle brackets cannot survive serialization.
    if "<" in value or ">" in value:
        raise TermError(f"angle bracket in IRI: {value!r}")


def iri(value: str) -> Term:
    return Term("iri", value)


def literal(lexical: str, datatype: str = XSD_STRING, lang: Optional[str] = None) -> Term:
    if lang is not None and datatype in (XSD_STRING, RDF_LANG_STRING):
        return Term("literal", lexical, RDF_LANG_STRING, lang)
    return Term("literal", lexical, datatype, lang)


def blank(label: str) -> Term:
    return Term("blank", label)


DEFAULT_GRAPH = iri(DEFAULT_GRAPH_IRI)

_LITERAL_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _escape_literal(text: str) -> str:
    out = []
    for ch in text:
        if ch in _LITERAL_ESCAPES:
            out.append(_LITERAL_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def format_term(term: Term) -> str:
    """Canonical single-token serialization, also the sort key everywhere."""
    if term.kind == "iri":
        return f"<{term.value}>"
    if term.kind == "blank":
        return f"_:{term.value}"
    body = f'"{_escape_literal(term.value)}"'
    if term.lang is not None:
        return f"{body}@{term.lang}"
    if term.datatype == XSD_STRING:
        return body
    return f"{body}^^<{term.datatype}>"


@dataclass(frozen=True, slots=True)
class Quad:
    """One statement; graph defaults to the reserved default-graph IRI."""

    s: Term
    p: Term
    o: Term
    g: Term = DEFAULT_GRAPH

    def __post_init__(self) -> None:
        if self.s.kind == "literal":
            raise TermError("subject must be an IRI or blank node")
        if self.p.kind != "iri":
            raise TermError("predicate must be an IRI")
        if self.g.kind != "iri":
            raise TermError("graph label must be an IRI")


def format_quad(quad: Quad) -> str:
    """Full statement including the terminating ' .', no newline.

    Default-graph quads omit the graph term, which keeps plain triples
    readable and makes triple/quad round trips agree.
    """
    parts = [format_term(quad.s), format_term(quad.p), format_term(quad.o)]
    if quad.g.value != DEFAULT_GRAPH_IRI:
        parts.append(format_term(quad.g))
    return " ".join(parts) + " ."


class QuadStore:
    """Set of quads with one index per position.

    A single re-entrant lock serializes every call, so each operation
    observes a consistent state; group inserts and removals are atomic
    with respect to concurrent readers.  The version counter increments
    once per effective mutation and lets caches detect staleness.
    """

    def __init__(self, quads: Iterable[Quad] = ()) -> None:
        self._lock = threading.RLock()
        self._quads: set[Quad] = set()
        self._by_s: dict[Term, set[Quad]] = {}
        self._by_p: dict[Term, set[Quad]] = {}
        self._by_o: dict[Term, set[Quad]] = {}
        self._by_g: dict[Term, set[Quad]] = {}
        self._version = 0
        for quad in quads:
            self.insert(quad)

    @property
    def version(self) -> int:
        with self._lock:
            return self._version

    def __len__(self) -> int:
        with self._lock:
            return len(self._quads)

    def __contains__(self, quad: Quad) -> bool:
        with self._lock:
            return quad in self._quads

    def __iter__(self) -> Iterator[Quad]:
        return iter(self.quads())

    def quads(self) -> list[Quad]:
        """Snapshot of the whole store in canonical statement order."""
        with self._lock:
            return sorted(self._quads, key=format_quad)

    def graphs(self) -> list[Term]:
        with self._lock:
            return sorted(self._by_g, key=format_term)

    def insert(self, quad: Quad) -> bool:
        if not isinstance(quad, Quad):
            raise TermError("expected a Quad")
        with self._lock:
            if quad in self._quads:
                return False
            self._quads.add(quad)
            for index, key in self._index_keys(quad):
                index.setdefault(key, set()).add(quad)
            self._version += 1
            return True

    def remove(self, quad: Quad) -> bool:
        with self._lock:
            if quad not in self._quads:
                return False
            self._quads.remove(quad)
            for index, key in self._index_keys(quad):
                bucket = index[key]
                bucket.remove(quad)
                if not bucket:
                    del index[key]
            self._version += 1
            return True

    def insert_all(self, quads: Iterable[Quad]) -> int:
        """Insert a group atomically; returns how many were new."""
        with self._lock:
            return sum(1 for quad in quads if self.insert(quad))

    def remove_all(self, quads: Iterable[Quad]) -> int:
        with self._lock:
            return sum(1 for quad in quads if self.remove(quad))

    def match(
        self,
        s: Optional[Term] = None,
        p: Optional[Term] = None,
        o: Optional[Term] = None,
        g: Optional[Term] = None,
    ) -> list[Quad]:
        """All quads agreeing with the bound positions, canonically sorted."""
        with self._lock:
            buckets = []
            for index, key in (
                (self._by_s, s),
                (self._by_p, p),
                (self._by_o, o),
                (self._by_g, g),
            ):
                if key is not None:
                    bucket = index.get(key)
                    if not bucket:
                        return []
                    buckets.append(bucket)
            if not buckets:
                found = set(self._quads)
            else:
                buckets.sort(key=len)
                found = buckets[0].intersection(*buckets[1:])
            return sorted(found, key=format_quad)

    def _index_keys(self, quad: Quad):
        return (
            (self._by_s, quad.s),
            (self._by_p, quad.p),
            (self._by_o, quad.o),
            (self._by_g, quad.g),
        )
