"""Lightweight reasoning over concept vocabularies.

Three constructs are honoured: owl:sameAs merges concepts into identity
classes, rdfs:subClassOf gives a reflexive-transitive specialization
order, and rdfs:seeAlso yields one-hop suggestions.  Expansion only ever
walks downward (toward subclasses), so searching a broad concept finds
narrower material but never the reverse.
"""

from __future__ import annotations

import enum
from typing import Optional

from .rdf import QuadStore, iri

OWL_SAME_AS = "http://www.w3.org/2002/07/owl#sameAs"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
RDFS_SUBCLASS_OF = RDFS_NS + "subClassOf"
RDFS_SEE_ALSO = RDFS_NS + "seeAlso"


class Tier(str, enum.Enum):
    """How a concept entered an expansion."""

    DIRECT = "direct"
    SUBCLASS = "subclass-derived"


class SameAsPartition:
    """Equivalence classes induced by owl:sameAs, used as an equation.

    Each class is represented by its bytewise-least member, so canonical
    forms do not depend on statement order.
    """

    def __init__(self, pairs: list[tuple[str, str]]):
        parent: dict[str, str] = {}

        def find(node: str) -> str:
            root = node
            while parent.get(root, root) != root:
                root = parent[root]
            while parent.get(node, node) != node:
                parent[node], node = root, parent[node]
            return root

        for a, b in pairs:
            parent.setdefault(a, a)
            parent.setdefault(b, b)
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        members: dict[str, list[str]] = {}
        for node in parent:
            members.setdefault(find(node), []).append(node)
        self._rep: dict[str, str] = {}
        self._members: dict[str, tuple[str, ...]] = {}
        for group in members.values():
            group.sort()
            least = group[0]
            self._members[least] = tuple(group)
            for node in group:
                self._rep[node] = least

    def rep(self, concept: str) -> str:
        return self._rep.get(concept, concept)

    def class_of(self, concept: str) -> tuple[str, ...]:
        """All members of the concept's identity class, sorted."""
        return self._members.get(self.rep(concept), (concept,))


def sameas_partition(store: QuadStore) -> SameAsPartition:
    pairs = [
        (q.s.value, q.o.value)
        for q in store.match(None, iri(OWL_SAME_AS), None, None)
        if q.s.kind == "iri" and q.o.kind == "iri"
    ]
    return SameAsPartition(pairs)


class SubclassClosure:
    """Reflexive-transitive rdfs:subClassOf closure over sameAs classes.

    Edges are rewritten through partition representatives first; cycles
    collapse into mutual membership rather than erroring.
    """

    def __init__(self, edges: list[tuple[str, str]], partition: SameAsPartition):
        self._partition = partition
        children: dict[str, set[str]] = {}
        nodes: set[str] = set()
        for sub, sup in edges:
            sub_rep, sup_rep = partition.rep(sub), partition.rep(sup)
            nodes.add(sub_rep)
            nodes.add(sup_rep)
            children.setdefault(sup_rep, set()).add(sub_rep)
        self._down: dict[str, frozenset[str]] = {}
        for node in nodes:
            reached = {node}
            queue = [node]
            while queue:
                current = queue.pop()
                for child in children.get(current, ()):
                    if child not in reached:
                        reached.add(child)
                        queue.append(child)
            self._down[node] = frozenset(reached)

    def subclasses(self, concept: str) -> frozenset[str]:
        """Representatives of concept and everything below it, itself included."""
        rep = self._partition.rep(concept)
        return self._down.get(rep, frozenset((rep,)))


def subclass_closure(
    store: QuadStore, partition: Optional[SameAsPartition] = None
) -> SubclassClosure:
    if partition is None:
        partition = sameas_partition(store)
    edges = [
        (q.s.value, q.o.value)
        for q in store.match(None, iri(RDFS_SUBCLASS_OF), None, None)
        if q.s.kind == "iri" and q.o.kind == "iri"
    ]
    return SubclassClosure(edges, partition)


def _expand(
    partition: SameAsPartition, closure: SubclassClosure, concept: str
) -> dict[str, Tier]:
    expansion = {member: Tier.DIRECT for member in partition.class_of(concept)}
    rep = partition.rep(concept)
    for sub_rep in closure.subclasses(concept):
        if sub_rep == rep:
            continue
        for member in partition.class_of(sub_rep):
            expansion.setdefault(member, Tier.SUBCLASS)
    return dict(sorted(expansion.items()))


def expand_concept(store: QuadStore, concept: str) -> dict[str, Tier]:
    """The concept's identity class plus all subclass-derived concepts."""
    partition = sameas_partition(store)
    return _expand(partition, subclass_closure(store, partition), concept)


def _related(store: QuadStore, partition: SameAsPartition, concept: str) -> list[str]:
    mine = set(partition.class_of(concept))
    my_rep = partition.rep(concept)
    neighbours: set[str] = set()
    for quad in store.match(None, iri(RDFS_SEE_ALSO), None, None):
        if quad.s.kind == "iri" and quad.o.kind == "iri":
            if quad.s.value in mine:
                neighbours.add(partition.rep(quad.o.value))
            if quad.o.value in mine:
                neighbours.add(partition.rep(quad.s.value))
    neighbours.discard(my_rep)
    return sorted(neighbours)


def related_concepts(store: QuadStore, concept: str) -> list[str]:
    """One-hop rdfs:seeAlso neighbours, canonicalized; suggestions only."""
    return _related(store, sameas_partition(store), concept)


class Reasoner:
    """Caches the partition and closure until the store mutates."""

    def __init__(self, store: QuadStore):
        self._store = store
        self._version = -1
        self._partition: Optional[SameAsPartition] = None
        self._closure: Optional[SubclassClosure] = None

    def _refresh(self) -> None:
        version = self._store.version
        if version != self._version:
            self._partition = sameas_partition(self._store)
            self._closure = subclass_closure(self._store, self._partition)
            self._version = version

    @property
    def partition(self) -> SameAsPartition:
        self._refresh()
        assert self._partition is not None
        return self._partition

    @property
    def closure(self) -> SubclassClosure:
        self._refresh()
        assert self._closure is not None
        return self._closure

    def expand(self, concept: str) -> dict[str, Tier]:
        self._refresh()
        assert self._partition is not None and self._closure is not None
        return _expand(self._partition, self._closure, concept)

    def related(self, concept: str) -> list[str]:
        self._refresh()
        assert self._partition is not None
        return _related(self._store, self._partition, concept)
