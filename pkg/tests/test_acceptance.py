"""End-to-end acceptance gate.

Nine properties cover the whole platform: query evaluation, closure
reasoning, the codec, annotation persistence, identity-aware search,
tiered scoring, federation deadlines, crash recovery and document
analysis.  Each test is one pass/fail verdict under `pytest -v`.
"""

import json
import os
import signal
import socket
import subprocess
import sys
import time
import urllib.parse
from decimal import Decimal
from pathlib import Path
from random import Random

import httpx

from lode.annotations import (
    Instant,
    Interval,
    Mode,
    create_annotation,
    from_quads,
    to_quads,
)
from lode.inference import (
    OWL_SAME_AS,
    RDFS_SUBCLASS_OF,
    sameas_partition,
    subclass_closure,
)
from lode.providers import FixtureProvider
from lode.query import evaluate
from lode.rdf import DEFAULT_GRAPH, Quad, QuadStore, format_quad, iri, literal
from lode.rdfio import (
    ParseError,
    decode_document,
    parse_nquads,
    parse_turtle,
    serialize_nquads,
)
from lode.search import (
    RDFS_LABEL,
    LabelIndex,
    analyze_document,
    federated_search,
    load_stopwords,
)
from lode.service import AnnotationService, ServiceConfig

from .util import (
    oracle_concept_counts,
    oracle_sameas_classes,
    oracle_subclass_matrix,
    random_quads,
    random_query_for,
    solve_query_oracle,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
PROG = "http://vocab.example.org/prog#"


def test_01_query_engine_agrees_with_enumeration_oracle_on_1000_cases():
    rng = Random(0xBEEF)
    begun = time.monotonic()
    for case in range(1000):
        store = QuadStore(random_quads(rng, rng.randrange(0, 41)))
        query = random_query_for(rng, store.quads())
        assert query.limit is None or query.limit >= 0
        assert 1 <= len(query.patterns) <= 3
        assert len(query.filters) <= 2
        got = evaluate(store, query)
        want = solve_query_oracle(store.quads(), query)
        assert got == want, f"case {case} diverged: {query}"
    assert time.monotonic() - begun < 60.0


def test_02_closures_agree_with_fixpoint_oracles_on_500_graphs():
    rng = Random(0xC105)
    for case in range(500):
        n = rng.randrange(2, 31)
        nodes = [f"u:n{i}" for i in range(n)]
        same_edges = [
            (rng.choice(nodes), rng.choice(nodes))
            for _ in range(rng.randrange(0, n))
        ]
        sub_edges = [
            (rng.choice(nodes), rng.choice(nodes))
            for _ in range(rng.randrange(0, 2 * n))
        ]
        if case % 3 == 0 and n >= 3:  # force an explicit subclass cycle
            sub_edges += [(nodes[0], nodes[1]), (nodes[1], nodes[2]), (nodes[2], nodes[0])]
        quads = [
            Quad(iri(s), iri(OWL_SAME_AS), iri(o), DEFAULT_GRAPH)
            for s, o in same_edges
        ] + [
            Quad(iri(s), iri(RDFS_SUBCLASS_OF), iri(o), DEFAULT_GRAPH)
            for s, o in sub_edges
        ]
        store = QuadStore(quads)
        partition = sameas_partition(store)
        closure = subclass_closure(store, partition)
        rep_oracle = oracle_sameas_classes(same_edges)
        down_oracle = oracle_subclass_matrix(sub_edges, rep_oracle)
        for node in nodes:
            rep = partition.rep(node)
            assert rep == rep_oracle.get(node, node), f"case {case}: rep({node})"
            assert closure.subclasses(node) == down_oracle.get(rep, {rep}), (
                f"case {case}: subclasses({node})"
            )


def test_03_codec_round_trips_500_stores_and_survives_10000_fuzz_inputs():
    rng = Random(0xC0DEC)
    for _ in range(500):
        store = QuadStore(random_quads(rng, rng.randrange(0, 30)))
        text = serialize_nquads(store.quads())
        back = QuadStore(parse_nquads(text, blank_prefix=""))
        assert back.quads() == store.quads()
        assert serialize_nquads(back.quads()) == text

    interesting = '<>"\\@.:#^_ \t\n{};,aZ0é€퟿'
    for i in range(10_000):
        if i % 2 == 0:
            raw = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 50)))
            try:
                text = decode_document(raw)
            except ParseError:
                continue  # undecodable bytes are rejected at the door
        else:
            text = "".join(
                rng.choice(interesting) for _ in range(rng.randrange(0, 50))
            )
        for parser in (parse_nquads, parse_turtle):
            try:
                parser(text)
            except ParseError:
                pass  # rejection is fine; crashing is not


def test_04_annotations_round_trip_500_times_with_exact_quad_counts():
    rng = Random(0xA110)
    total = 0
    for batch in range(25):
        video = f"u:videos/batch{batch}"
        store = QuadStore()
        originals = []
        for _ in range(20):
            if rng.random() < 0.5:
                temporal = Instant(Decimal(rng.randrange(0, 7200)) / 4)
            else:
                begin = Decimal(rng.randrange(0, 7200)) / 4
                temporal = Interval(begin, begin + Decimal(rng.randrange(1, 200)) / 4)
            bodies = sorted(
                {f"u:concepts/c{rng.randrange(40)}" for _ in range(rng.randrange(1, 4))}
            )
            annotation = create_annotation(
                video=video,
                temporal=temporal,
                bodies=bodies,
                mode=rng.choice(list(Mode)),
                annotator=rng.choice(["ada", "http://people.example.org/grace"]),
            )
            quads = to_quads(annotation)
            if isinstance(temporal, Instant) and len(bodies) == 1:
                assert len(quads) == 7
            if isinstance(temporal, Interval) and len(bodies) == 2:
                assert len(quads) == 9
            assert len(quads) == 6 + (1 if isinstance(temporal, Instant) else 2) + len(bodies) - 1
            store.insert_all(quads)
            originals.append(annotation)
            total += 1
        recovered = from_quads(store, video)
        assert recovered == sorted(originals, key=lambda a: (a.start, a.id))
    assert total == 500


def _fresh_service(**overrides) -> AnnotationService:
    return AnnotationService(ServiceConfig(**overrides))


def _post(svc, target, doc):
    return svc.handle("POST", target, json.dumps(doc).encode("utf-8"))


def test_05_sameas_bodies_find_both_videos_and_duplicates_collapse_to_one_pair():
    svc = _fresh_service()
    concept_a = "u:concepts/OopIntro"
    concept_a_prime = "u:concepts/OopIntroAlias"
    svc.store.insert(
        Quad(iri(concept_a), iri(OWL_SAME_AS), iri(concept_a_prime), DEFAULT_GRAPH)
    )
    video1 = "u:videos/java-tutorial"
    video2 = "u:videos/second-course"
    svc.store.insert(
        Quad(iri(video1), iri(RDFS_LABEL), literal("Java Tutorial"), DEFAULT_GRAPH)
    )
    status, _ = _post(
        svc,
        "/annotations",
        {
            "video": video1,
            "time": {"instant": 12.5},
            "bodies": [concept_a],
            "mode": "visual",
            "annotator": "ada",
        },
    )
    assert status == 201
    status, _ = _post(
        svc,
        "/annotations",
        {
            "video": video2,
            "time": {"instant": 40},
            "bodies": [concept_a_prime],
            "mode": "conceptual",
            "annotator": "ada",
        },
    )
    assert status == 201

    status, payload = svc.handle(
        "GET", "/search/concept?uri=" + concept_a.replace(":", "%3A")
    )
    assert status == 200
    results = payload["results"]
    assert [r["resource"] for r in results] == [video1, video2]  # IRI tie order
    assert [r["score"] for r in results] == [1.0, 1.0]
    assert results[0]["title"] == "Java Tutorial"

    inheritance_video = "u:videos/inheritance"
    body_x, body_y = "u:concepts/X", "u:concepts/Y"
    svc.store.insert(Quad(iri(body_x), iri(OWL_SAME_AS), iri(body_y), DEFAULT_GRAPH))
    for body, time_obj in [(body_x, {"begin": 10, "end": 20}), (body_y, {"begin": 15, "end": 25})]:
        status, _ = _post(
            svc,
            "/annotations",
            {
                "video": inheritance_video,
                "time": time_obj,
                "bodies": [body],
                "mode": "visual",
                "annotator": "ada",
            },
        )
        assert status == 201
    status, pairs = svc.handle(
        "GET", "/videos/" + urllib.parse.quote(inheritance_video, safe="") + "/duplicates"
    )
    assert status == 200
    assert len(pairs) == 1
    assert pairs[0]["first"]["id"] < pairs[0]["second"]["id"]


def test_06_subclass_matches_score_half_and_direct_matches_score_one():
    svc = _fresh_service()
    class_a, class_b = "u:concepts/Broad", "u:concepts/Narrow"
    svc.store.insert(
        Quad(iri(class_b), iri(RDFS_SUBCLASS_OF), iri(class_a), DEFAULT_GRAPH)
    )
    status, _ = _post(
        svc,
        "/annotations",
        {
            "video": "u:videos/v",
            "time": {"instant": 3},
            "bodies": [class_b],
            "mode": "visual",
            "annotator": "ada",
        },
    )
    assert status == 201
    status, broad = svc.handle("GET", "/search/concept?uri=u%3Aconcepts%2FBroad")
    assert status == 200
    assert [(r["resource"], r["score"]) for r in broad["results"]] == [
        ("u:videos/v", 0.5)
    ]
    status, narrow = svc.handle("GET", "/search/concept?uri=u%3Aconcepts%2FNarrow")
    assert status == 200
    assert [(r["resource"], r["score"]) for r in narrow["results"]] == [
        ("u:videos/v", 1.0)
    ]


def test_07_federation_deadline_drops_slow_provider_and_merges_when_generous():
    fast = FixtureProvider.from_file("fast", FIXTURES / "providers/fast.provider")
    slow = FixtureProvider.from_file("slow", FIXTURES / "providers/slow.provider")
    assert fast.latency_ms == 10 and slow.latency_ms == 200

    begun = time.monotonic()
    results, statuses = federated_search([fast, slow], {}, deadline_ms=50)
    wall_ms = (time.monotonic() - begun) * 1000
    assert wall_ms < 150
    outcome = {s.provider: s.outcome for s in statuses}
    assert outcome == {"fast": "ok", "slow": "timeout"}
    assert {r.resource for r in results} == {
        "http://videos.example.org/oop-basics",
        "http://videos.example.org/java-tutorial",
    }
    scores = {r.resource: r.score for r in results}
    assert scores["http://videos.example.org/java-tutorial"] == 1.0

    results, statuses = federated_search([fast, slow], {}, deadline_ms=500)
    assert {s.outcome for s in statuses} == {"ok"}
    scores = {r.resource: r.score for r in results}
    assert scores["http://videos.example.org/java-tutorial"] == 1.0 + 1.5
    assert scores["http://videos.example.org/oop-basics"] == 2.0
    assert scores["http://videos.example.org/design-patterns"] == 1.0


def _free_port() -> int:
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        return probe.getsockname()[1]


def _wait_healthy(base: str, proc: subprocess.Popen) -> None:
    deadline = time.monotonic() + 15
    while time.monotonic() < deadline:
        if proc.poll() is not None:
            raise AssertionError(f"server exited early: {proc.returncode}")
        try:
            if httpx.get(base + "/healthz", timeout=1.0).status_code == 200:
                return
        except httpx.HTTPError:
            time.sleep(0.05)
    raise AssertionError("server did not become healthy")


def _annotation_doc(i: int) -> dict:
    return {
        "video": "u:videos/crash-drill",
        "time": {"instant": str(i)},
        "bodies": [f"u:concepts/c{i % 3}"],
        "mode": "visual",
        "annotator": "ada",
        "id": f"urn:uuid:00000000-0000-0000-0000-{i:012d}",
        "created": "2026-01-01T00:00:00Z",
    }


def test_08_sigkill_after_acknowledged_mutations_loses_nothing():
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        crash_journal = tmp_path / "crash.journal"
        port = _free_port()
        base = f"http://127.0.0.1:{port}"
        proc = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "lode.cli",
                "serve",
                "--listen",
                f"127.0.0.1:{port}",
                "--journal",
                str(crash_journal),
            ],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        acknowledged = 0
        try:
            _wait_healthy(base, proc)
            planned = [_annotation_doc(i) for i in range(12)]
            with httpx.Client(timeout=5.0) as client:
                for doc in planned[:7]:  # the load is cut short mid-way
                    response = client.post(base + "/annotations", json=doc)
                    assert response.status_code == 201
                    acknowledged += 1
        finally:
            os.kill(proc.pid, signal.SIGKILL)
            proc.wait(timeout=10)
        assert acknowledged == 7

        # restart on the same journal: every acknowledged mutation is back
        port2 = _free_port()
        base2 = f"http://127.0.0.1:{port2}"
        proc2 = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "lode.cli",
                "serve",
                "--listen",
                f"127.0.0.1:{port2}",
                "--journal",
                str(crash_journal),
            ],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        try:
            _wait_healthy(base2, proc2)
            listing = httpx.get(
                base2 + "/videos/u%3Avideos%2Fcrash-drill/annotations", timeout=5.0
            ).json()
            assert [a["id"] for a in listing] == [
                _annotation_doc(i)["id"] for i in range(7)
            ]
        finally:
            proc2.terminate()
            proc2.wait(timeout=10)

        # a clean run of the same seven mutations exports byte-identically
        clean_journal = tmp_path / "clean.journal"
        svc = AnnotationService(ServiceConfig(journal_path=clean_journal))
        for doc in planned[:7]:
            status, _ = _post(svc, "/annotations", doc)
            assert status == 201
        svc.close()

        exports = []
        for journal in (crash_journal, clean_journal):
            proc3 = subprocess.run(
                [
                    sys.executable,
                    "-m",
                    "lode.cli",
                    "export",
                    "-",
                    "--journal",
                    str(journal),
                ],
                capture_output=True,
            )
            assert proc3.returncode == 0
            exports.append(proc3.stdout)
        assert exports[0] == exports[1]
        assert exports[0].count(b"\n") == 49  # 7 annotations x 7 quads


def test_09_lecture_note_concept_counts_match_oracle_deterministically():
    from lode.rdfio import read_rdf_file

    vocab = read_rdf_file(FIXTURES / "vocab-programming.ttl")
    text = (FIXTURES / "lecture-note.txt").read_text("utf-8")
    assert len(text.split()) == 500

    runs = []
    for _ in range(2):  # fresh index each run: output must not vary
        store = QuadStore(vocab)
        matches = analyze_document(LabelIndex(store), text)
        runs.append([(m.concept, m.count) for m in matches])
    assert runs[0] == runs[1]

    store = QuadStore(vocab)
    label_pairs = [
        (q.s.value, q.o.value)
        for q in store.match(None, iri(RDFS_LABEL), None, None)
        if q.o.kind == "literal"
    ]
    want = oracle_concept_counts(label_pairs, load_stopwords(), text)
    assert dict(runs[0]) == want
    top_concept, top_count = runs[0][0]
    assert top_concept == PROG + "Inheritance"
    assert top_count == 5
    assert top_count > runs[0][1][1]  # strictly ahead: no tie at the top
