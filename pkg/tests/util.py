"""Shared generators and independent oracles for the test suite.

The oracles intentionally reimplement contracts from scratch (linear
scans, fixpoints, brute-force bijections) and share only the plain data
types with the package, so an implementation bug cannot hide in both
routes.
"""

from __future__ import annotations

import itertools
import re
from decimal import Decimal
from random import Random
from typing import Iterable, Optional

from lode.query import Comparison, Query, Variable
from lode.rdf import (
    DEFAULT_GRAPH_IRI,
    RDF_LANG_STRING,
    XSD_DECIMAL,
    XSD_INTEGER,
    XSD_STRING,
    Quad,
    Term,
    blank,
    iri,
    literal,
)

# ---------------------------------------------------------------------------
# independent canonical formatting (mirrors the documented contract)

_DEC_RE = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)$")


def oracle_term_str(term: Term) -> str:
    if term.kind == "iri":
        return "<" + term.value + ">"
    if term.kind == "blank":
        return "_:" + term.value
    out = ['"']
    for ch in term.value:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 32:
            out.append("\\u%04X" % ord(ch))
        else:
            out.append(ch)
    out.append('"')
    text = "".join(out)
    if term.lang is not None:
        return text + "@" + term.lang
    if term.datatype != XSD_STRING:
        return text + "^^<" + term.datatype + ">"
    return text


def oracle_quad_str(quad: Quad) -> str:
    parts = [oracle_term_str(quad.s), oracle_term_str(quad.p), oracle_term_str(quad.o)]
    if quad.g.value != DEFAULT_GRAPH_IRI:
        parts.append(oracle_term_str(quad.g))
    return " ".join(parts) + " ."


# ---------------------------------------------------------------------------
# query oracle: per-pattern linear scan, pairwise merge, then filter/project


def _unify(pattern, triple) -> Optional[dict[str, Term]]:
    binding: dict[str, Term] = {}
    for slot, value in zip(pattern, triple):
        if isinstance(slot, Variable):
            if slot.name in binding and binding[slot.name] != value:
                return None
            binding[slot.name] = value
        elif slot != value:
            return None
    return binding


def _merge(a: dict[str, Term], b: dict[str, Term]) -> Optional[dict[str, Term]]:
    merged = dict(a)
    for name, value in b.items():
        if name in merged and merged[name] != value:
            return None
        merged[name] = value
    return merged


def _oracle_compare(left: Term, right: Term, op: str) -> bool:
    a, b = left.value, right.value
    if _DEC_RE.fullmatch(a) and _DEC_RE.fullmatch(b):
        x, y = Decimal(a), Decimal(b)
    else:
        x, y = a, b
    return {
        "=": x == y,
        "!=": x != y,
        "<": x < y,
        "<=": x <= y,
        ">": x > y,
        ">=": x >= y,
    }[op]


def solve_query_oracle(
    quads: Iterable[Quad], query: Query
) -> list[dict[str, Term]]:
    quads = list(quads)
    assignments: list[dict[str, Term]] = [{}]
    for pattern in query.patterns:
        candidates = []
        seen_c = set()
        for quad in quads:
            binding = _unify(pattern, (quad.s, quad.p, quad.o))
            if binding is not None:
                key = frozenset(binding.items())
                if key not in seen_c:
                    seen_c.add(key)
                    candidates.append(binding)
        merged = []
        seen_m = set()
        for assignment in assignments:
            for candidate in candidates:
                result = _merge(assignment, candidate)
                if result is not None:
                    key = frozenset(result.items())
                    if key not in seen_m:
                        seen_m.add(key)
                        merged.append(result)
        assignments = merged
        if not assignments:
            break

    for comp in query.filters:
        kept = []
        for assignment in assignments:
            left = assignment[comp.left.name]
            right = (
                assignment[comp.right.name]
                if isinstance(comp.right, Variable)
                else comp.right
            )
            if _oracle_compare(left, right, comp.op):
                kept.append(assignment)
        assignments = kept

    names = query.projected()
    rows = [tuple(a[n] for n in names) for a in assignments]
    if query.distinct:
        rows = list(dict.fromkeys(rows))
    rows.sort(key=lambda row: tuple(oracle_term_str(t) for t in row))
    if query.limit is not None:
        rows = rows[: query.limit]
    return [dict(zip(names, row)) for row in rows]


# ---------------------------------------------------------------------------
# closure oracles: naive fixpoints


def oracle_sameas_classes(pairs: list[tuple[str, str]]) -> dict[str, str]:
    """node -> least member of its class, by repeated set merging."""
    groups: list[set[str]] = [{a, b} for a, b in pairs]
    changed = True
    while changed:
        changed = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                if groups[i] and groups[j] and groups[i] & groups[j]:
                    groups[i] |= groups[j]
                    groups[j] = set()
                    changed = True
    rep = {}
    for group in groups:
        if group:
            least = min(group)
            for node in group:
                rep[node] = least
    return rep


def oracle_subclass_matrix(
    edges: list[tuple[str, str]], rep: dict[str, str]
) -> dict[str, set[str]]:
    """class -> all reflexive-transitive subclasses, via a reachability
    fixpoint over sameAs-canonical edges (cycles allowed)."""
    canon = [(rep.get(a, a), rep.get(b, b)) for a, b in edges]
    nodes = {n for edge in canon for n in edge}
    down = {n: {n} for n in nodes}
    changed = True
    while changed:
        changed = False
        for sub, sup in canon:
            add = down[sub] - down[sup]
            if add:
                down[sup] |= add
                changed = True
    return down


# ---------------------------------------------------------------------------
# blank-aware quad set equality


def quad_sets_isomorphic(a: Iterable[Quad], b: Iterable[Quad]) -> bool:
    """True when b is a blank-label relabeling of a (brute force)."""

    def skeleton(quads):
        labels = set()
        for q in quads:
            for t in (q.s, q.o):
                if t.kind == "blank":
                    labels.add(t.value)
        return sorted(labels)

    a, b = list(a), list(b)
    labels_a, labels_b = skeleton(a), skeleton(b)
    if len(labels_a) != len(labels_b) or len(set(a)) != len(set(b)):
        return False
    target = {(q.s, q.p, q.o, q.g) for q in b}

    def rename(term: Term, mapping: dict[str, str]) -> Term:
        if term.kind == "blank":
            return blank(mapping[term.value])
        return term

    for perm in itertools.permutations(labels_b):
        mapping = dict(zip(labels_a, perm))
        renamed = {
            (rename(q.s, mapping), q.p, rename(q.o, mapping), q.g) for q in a
        }
        if renamed == target:
            return True
    return False


# ---------------------------------------------------------------------------
# random data generators

_SCHEMES = ("u", "urn", "http", "tag")
_WORDS = ("a", "b", "c", "apple", "Bahn", "zzz", "Q", "x1", "no2", "v")
_LANGS = ("en", "de", "en-GB", "ta")
_DATATYPES = (XSD_STRING, XSD_INTEGER, XSD_DECIMAL, "u:dt1", "u:dt2")
_LIT_CHARS = 'ab "\\\n\t\rzé9-'


def random_iri_term(rng: Random) -> Term:
    return iri(f"{rng.choice(_SCHEMES)}:{rng.choice(_WORDS)}{rng.randrange(6)}")


def random_literal_term(rng: Random) -> Term:
    lexical = "".join(
        rng.choice(_LIT_CHARS) for _ in range(rng.randrange(0, 7))
    )
    roll = rng.random()
    if roll < 0.25:
        return literal(lexical, lang=rng.choice(_LANGS))
    if roll < 0.6:
        return literal(lexical, datatype=rng.choice(_DATATYPES))
    if roll < 0.8:
        return literal(str(rng.randrange(-50, 50)), datatype=XSD_INTEGER)
    return literal(lexical)


def random_blank_term(rng: Random) -> Term:
    return blank(f"n{rng.randrange(4)}")


def random_term(rng: Random, blanks: bool = True) -> Term:
    roll = rng.random()
    if roll < 0.55:
        return random_iri_term(rng)
    if roll < 0.85 or not blanks:
        return random_literal_term(rng)
    return random_blank_term(rng)


def random_quad(rng: Random, blanks: bool = True) -> Quad:
    s = random_blank_term(rng) if blanks and rng.random() < 0.15 else random_iri_term(rng)
    p = random_iri_term(rng)
    o = random_term(rng, blanks=blanks)
    if rng.random() < 0.4:
        return Quad(s, p, o)
    return Quad(s, p, o, random_iri_term(rng))


def random_quads(rng: Random, max_quads: int, blanks: bool = True) -> list[Quad]:
    count = rng.randrange(0, max_quads + 1)
    return list({random_quad(rng, blanks=blanks) for _ in range(count)})


def random_query_for(rng: Random, quads: list[Quad]) -> Query:
    """A 1-3 pattern query biased toward joins that actually match."""
    var_names = ["x", "y", "z", "w", "v2", "k"]
    rng.shuffle(var_names)
    fresh = iter(var_names)
    used_vars: list[Variable] = []

    def some_var() -> Variable:
        if used_vars and rng.random() < 0.6:
            return rng.choice(used_vars)
        try:
            var = Variable(next(fresh))
        except StopIteration:
            return rng.choice(used_vars)
        used_vars.append(var)
        return var

    def pattern_from_quad() -> tuple:
        if quads and rng.random() < 0.8:
            base = rng.choice(quads)
            parts = [base.s, base.p, base.o]
        else:
            parts = [
                random_iri_term(rng),
                random_iri_term(rng),
                random_term(rng, blanks=False),
            ]
        out = []
        for i, part in enumerate(parts):
            keep_term = rng.random() < 0.35
            if keep_term and not (i == 0 and part.kind == "literal"):
                out.append(part)
            else:
                out.append(some_var())
        return tuple(out)

    patterns = tuple(pattern_from_quad() for _ in range(rng.randrange(1, 4)))
    pattern_vars = sorted(
        {p.name for pat in patterns for p in pat if isinstance(p, Variable)}
    )

    filters = []
    for _ in range(rng.randrange(0, 3)):
        if not pattern_vars:
            break
        left = Variable(rng.choice(pattern_vars))
        op = rng.choice(("=", "!=", "<", "<=", ">", ">="))
        if rng.random() < 0.3:
            right: object = Variable(rng.choice(pattern_vars))
        elif rng.random() < 0.5:
            right = literal(str(rng.randrange(-20, 60)), datatype=XSD_INTEGER)
        else:
            right = random_term(rng, blanks=False)
            if isinstance(right, Term) and right.kind == "blank":
                right = random_iri_term(rng)
        filters.append(Comparison(left, op, right))

    if pattern_vars and rng.random() < 0.8:
        count = rng.randrange(1, len(pattern_vars) + 1)
        projected = tuple(rng.sample(pattern_vars, count))
        select_all = False
    else:
        projected = ()
        select_all = True

    return Query(
        variables=projected,
        select_all=select_all,
        distinct=rng.random() < 0.4,
        patterns=patterns,
        filters=tuple(filters),
        limit=rng.choice((None, None, None, 0, 1, 3, 10)),
    )


# ---------------------------------------------------------------------------
# n-gram counting oracle for document analysis


def oracle_concept_counts(
    label_quads: list[tuple[str, str]], stopwords: frozenset[str], text: str
) -> dict[str, int]:
    """Greedy longest-match concept counting, reimplemented from scratch.

    label_quads: (concept IRI, label literal) pairs.
    """
    token_re = re.compile(r"[0-9A-Za-z]+")

    def words(value: str) -> tuple[str, ...]:
        return tuple(m.group().casefold() for m in token_re.finditer(value))

    by_window: dict[tuple[str, ...], set[str]] = {}
    for concept, label in label_quads:
        window = words(label)
        if 1 <= len(window) <= 3:
            by_window.setdefault(window, set()).add(concept)

    stream = [w for w in words(text) if w not in stopwords]
    counts: dict[str, int] = {}
    i = 0
    while i < len(stream):
        for n in (3, 2, 1):
            window = tuple(stream[i : i + n])
            if len(window) == n and window in by_window:
                for concept in by_window[window]:
                    counts[concept] = counts.get(concept, 0) + 1
                i += n
                break
        else:
            i += 1
    return counts
