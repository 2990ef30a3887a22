"""Identity merging and subclass closure vs independent fixpoint oracles."""

from random import Random

from lode.inference import (
    OWL_SAME_AS,
    RDFS_SEE_ALSO,
    RDFS_SUBCLASS_OF,
    Reasoner,
    Tier,
    expand_concept,
    related_concepts,
    sameas_partition,
    subclass_closure,
)
from lode.rdf import DEFAULT_GRAPH, Quad, QuadStore, iri

from .util import oracle_sameas_classes, oracle_subclass_matrix


def edge_quads(pred: str, edges):
    return [Quad(iri(s), iri(pred), iri(o), DEFAULT_GRAPH) for s, o in edges]


def test_sameas_basics():
    store = QuadStore(edge_quads(OWL_SAME_AS, [("u:b", "u:a"), ("u:b", "u:c")]))
    part = sameas_partition(store)
    assert part.rep("u:a") == part.rep("u:b") == part.rep("u:c") == "u:a"
    assert part.rep("u:zz") == "u:zz"  # unknown nodes are their own class
    assert part.class_of("u:c") == ("u:a", "u:b", "u:c")
    assert part.class_of("u:zz") == ("u:zz",)


def test_sameas_representative_is_bytewise_least():
    store = QuadStore(edge_quads(OWL_SAME_AS, [("u:Z", "u:a")]))
    part = sameas_partition(store)
    # 'Z' (0x5a) sorts before 'a' (0x61) bytewise
    assert part.rep("u:a") == "u:Z"


def test_sameas_matches_oracle_randomized():
    rng = Random(101)
    for _ in range(200):
        nodes = [f"u:n{i}" for i in range(rng.randrange(2, 25))]
        edges = [
            (rng.choice(nodes), rng.choice(nodes))
            for _ in range(rng.randrange(0, 30))
        ]
        store = QuadStore(edge_quads(OWL_SAME_AS, edges))
        part = sameas_partition(store)
        want = oracle_sameas_classes(edges)
        for node in nodes:
            assert part.rep(node) == want.get(node, node)


def test_subclass_closure_reflexive_transitive():
    store = QuadStore(
        edge_quads(RDFS_SUBCLASS_OF, [("u:c", "u:b"), ("u:b", "u:a")])
    )
    closure = subclass_closure(store)
    assert closure.subclasses("u:a") == {"u:a", "u:b", "u:c"}
    assert closure.subclasses("u:b") == {"u:b", "u:c"}
    assert closure.subclasses("u:c") == {"u:c"}
    assert closure.subclasses("u:unknown") == {"u:unknown"}


def test_subclass_cycle_means_mutual_membership():
    store = QuadStore(
        edge_quads(RDFS_SUBCLASS_OF, [("u:a", "u:b"), ("u:b", "u:a"), ("u:c", "u:a")])
    )
    closure = subclass_closure(store)
    assert closure.subclasses("u:a") == {"u:a", "u:b", "u:c"}
    assert closure.subclasses("u:b") == {"u:a", "u:b", "u:c"}


def test_subclass_edges_rewritten_through_sameas():
    store = QuadStore(
        edge_quads(RDFS_SUBCLASS_OF, [("u:sub", "u:aliasB")])
        + edge_quads(OWL_SAME_AS, [("u:aliasB", "u:b")])
    )
    closure = subclass_closure(store)
    # querying via either alias lands on the canonical class
    assert closure.subclasses("u:b") == {"u:aliasB", "u:sub"}
    assert closure.subclasses("u:aliasB") == {"u:aliasB", "u:sub"}


def test_closure_matches_oracle_randomized():
    rng = Random(202)
    for _ in range(200):
        nodes = [f"u:c{i}" for i in range(rng.randrange(2, 20))]
        sub_edges = [
            (rng.choice(nodes), rng.choice(nodes))
            for _ in range(rng.randrange(0, 28))
        ]
        same_edges = [
            (rng.choice(nodes), rng.choice(nodes))
            for _ in range(rng.randrange(0, 5))
        ]
        store = QuadStore(
            edge_quads(RDFS_SUBCLASS_OF, sub_edges)
            + edge_quads(OWL_SAME_AS, same_edges)
        )
        part = sameas_partition(store)
        closure = subclass_closure(store, part)
        rep_map = oracle_sameas_classes(same_edges)
        want = oracle_subclass_matrix(sub_edges, rep_map)
        for node in nodes:
            rep = part.rep(node)
            assert closure.subclasses(node) == want.get(rep, {rep})


def doc_store():
    return QuadStore(
        edge_quads(RDFS_SUBCLASS_OF, [("u:Cat", "u:Animal"), ("u:Tabby", "u:Cat")])
        + edge_quads(OWL_SAME_AS, [("u:Feline", "u:Cat")])
        + edge_quads(RDFS_SEE_ALSO, [("u:Cat", "u:Dog"), ("u:Lion", "u:Cat")])
    )


def test_expand_concept_tiers():
    store = doc_store()
    assert expand_concept(store, "u:Cat") == {
        "u:Cat": Tier.DIRECT,
        "u:Feline": Tier.DIRECT,  # identity class via sameAs
        "u:Tabby": Tier.SUBCLASS,
    }
    assert expand_concept(store, "u:Animal") == {
        "u:Animal": Tier.DIRECT,
        "u:Cat": Tier.SUBCLASS,
        "u:Feline": Tier.SUBCLASS,
        "u:Tabby": Tier.SUBCLASS,
    }
    assert expand_concept(store, "u:Tabby") == {"u:Tabby": Tier.DIRECT}
    # expansion never walks upward
    assert "u:Animal" not in expand_concept(store, "u:Cat")
    assert expand_concept(store, "u:Nothing") == {"u:Nothing": Tier.DIRECT}


def test_expand_via_alias_equals_expand_via_canonical():
    store = doc_store()
    assert expand_concept(store, "u:Feline") == expand_concept(store, "u:Cat")


def test_expand_direct_wins_over_subclass():
    # a sameAs alias of the query concept that is also a strict subclass
    store = QuadStore(
        edge_quads(RDFS_SUBCLASS_OF, [("u:b", "u:a")])
        + edge_quads(OWL_SAME_AS, [("u:a", "u:b")])
    )
    got = expand_concept(store, "u:a")
    assert got == {"u:a": Tier.DIRECT, "u:b": Tier.DIRECT}


def test_expansion_keys_sorted():
    store = doc_store()
    for concept in ("u:Cat", "u:Animal"):
        keys = list(expand_concept(store, concept))
        assert keys == sorted(keys)


def test_expansion_monotone_under_new_edges():
    rng = Random(303)
    for _ in range(60):
        nodes = [f"u:k{i}" for i in range(10)]
        edges = [(rng.choice(nodes), rng.choice(nodes)) for _ in range(8)]
        base = edge_quads(RDFS_SUBCLASS_OF, edges)
        store = QuadStore(base)
        before = {n: set(expand_concept(store, n)) for n in nodes}
        grown = QuadStore(
            base + edge_quads(RDFS_SUBCLASS_OF, [(rng.choice(nodes), rng.choice(nodes))])
        )
        for n in nodes:
            assert before[n] <= set(expand_concept(grown, n))


def test_related_concepts_one_hop_both_directions():
    store = doc_store()
    assert related_concepts(store, "u:Cat") == ["u:Dog", "u:Lion"]
    # alias resolves to the same neighbourhood
    assert related_concepts(store, "u:Feline") == ["u:Dog", "u:Lion"]
    assert related_concepts(store, "u:Dog") == ["u:Cat"]
    assert related_concepts(store, "u:island") == []


def test_related_excludes_own_identity_class():
    store = QuadStore(
        edge_quads(OWL_SAME_AS, [("u:a", "u:b")])
        + edge_quads(RDFS_SEE_ALSO, [("u:a", "u:b"), ("u:a", "u:c")])
    )
    assert related_concepts(store, "u:a") == ["u:c"]
    assert related_concepts(store, "u:b") == ["u:c"]


def test_reasoner_tracks_store_version():
    store = doc_store()
    reasoner = Reasoner(store)
    assert reasoner.expand("u:Tabby") == {"u:Tabby": Tier.DIRECT}
    store.insert(
        Quad(iri("u:Manx"), iri(RDFS_SUBCLASS_OF), iri("u:Tabby"), DEFAULT_GRAPH)
    )
    assert reasoner.expand("u:Tabby") == {
        "u:Tabby": Tier.DIRECT,
        "u:Manx": Tier.SUBCLASS,
    }
    assert reasoner.related("u:Feline") == ["u:Dog", "u:Lion"]
    assert reasoner.partition.rep("u:Feline") == "u:Cat"
    assert "u:Manx" in reasoner.closure.subclasses("u:Cat")
