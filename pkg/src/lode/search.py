"""Concept search: label lookup, document analysis, federation, ranking.

The label index maps case-folded rdfs:label values to concept IRIs.
Document analysis matches label n-grams (up to three tokens) greedily
left to right after stopword removal.  Federated search fans a tiered
concept set out to providers under a wall-clock deadline and merges
whatever returned in time; late or failed providers are reported in the
statuses, never silently dropped.
"""

from __future__ import annotations

import re
import time
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from importlib import resources
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from .annotations import VA_ANNOTATION, Annotation, from_quads
from .inference import Reasoner, Tier, sameas_partition
from .rdf import RDF_TYPE, QuadStore, iri

RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"
FOAF_PERSON = "http://xmlns.com/foaf/0.1/Person"
WGS84_NS = "http://www.w3.org/2003/01/geo/wgs84_pos#"
WGS84_LAT = WGS84_NS + "lat"
WGS84_LONG = WGS84_NS + "long"
WGS84_SPATIAL_THING = WGS84_NS + "SpatialThing"

# Anything typed (or subclassed) under these counts as a place.
PLACE_CLASSES = (
    WGS84_SPATIAL_THING,
    "http://dbpedia.org/ontology/Place",
    "http://schema.org/Place",
    "https://schema.org/Place",
)

TIER_WEIGHT = {Tier.DIRECT: 1.0, Tier.SUBCLASS: 0.5}
DEFAULT_DEADLINE_MS = 2000
_MAX_NGRAM = 3

_TOKEN_RE = re.compile(r"[0-9A-Za-z]+")


def load_stopwords() -> frozenset[str]:
    text = (
        resources.files("lode").joinpath("resources/stopwords.txt").read_text("utf-8")
    )
    return frozenset(line.casefold() for line in text.split() if line)


_STOPWORDS = load_stopwords()


@dataclass(frozen=True, slots=True)
class TokenSpan:
    word: str
    start: int
    end: int


def tokenize(text: str) -> list[TokenSpan]:
    """Case-folded alphanumeric runs with their source offsets."""
    return [
        TokenSpan(m.group().casefold(), m.start(), m.end())
        for m in _TOKEN_RE.finditer(text)
    ]


@dataclass(frozen=True, slots=True)
class ConceptMatch:
    """One recognized concept with where and how often it matched."""

    concept: str
    label: str
    surface: str
    count: int
    spans: tuple[tuple[int, int], ...]


class LabelIndex:
    """Case-folded rdfs:label lookup table over a store snapshot."""

    def __init__(self, store: QuadStore):
        self._display: dict[str, str] = {}
        self._concepts: dict[str, tuple[str, ...]] = {}
        self._labels_by_iri: dict[str, list[str]] = {}
        raw: dict[str, set[str]] = {}
        for quad in store.match(None, iri(RDFS_LABEL), None, None):
            if quad.s.kind != "iri" or quad.o.kind != "literal":
                continue
            label = quad.o.value
            folded = label.casefold()
            if not folded:
                continue
            raw.setdefault(folded, set()).add(quad.s.value)
            best = self._display.get(folded)
            if best is None or label < best:
                self._display[folded] = label
            self._labels_by_iri.setdefault(quad.s.value, []).append(label)
        # A token window can belong to several labels; every concept behind
        # any of them gets credit, each under its least matching label.
        ngrams: dict[tuple[str, ...], dict[str, str]] = {}
        for folded, iris in raw.items():
            self._concepts[folded] = tuple(sorted(iris))
            tokens = tuple(t.word for t in tokenize(folded))
            if 0 < len(tokens) <= _MAX_NGRAM:
                bucket = ngrams.setdefault(tokens, {})
                for concept in iris:
                    if concept not in bucket or folded < bucket[concept]:
                        bucket[concept] = folded
        self._ngrams = {
            tokens: tuple(sorted(bucket.items()))
            for tokens, bucket in ngrams.items()
        }
        self._sorted_labels = sorted(self._concepts)

    def display_label(self, folded: str) -> str:
        return self._display[folded]

    def label_of(self, concept: str) -> Optional[str]:
        labels = self._labels_by_iri.get(concept)
        return min(labels) if labels else None

    def concepts_for(self, folded: str) -> tuple[str, ...]:
        return self._concepts.get(folded, ())

    def ngram_concepts(self, tokens: tuple[str, ...]) -> tuple[tuple[str, str], ...]:
        """(concept, folded label) pairs whose label is this token window."""
        return self._ngrams.get(tokens, ())

    def labels(self) -> list[str]:
        return self._sorted_labels


def lookup_concept(index: LabelIndex, keyword: str) -> list[ConceptMatch]:
    """Exact case-insensitive label match; prefix fallback from 3 chars.

    A concept reachable through several labels is reported once, under
    its shortest (then bytewise-least) matching label.  Results are
    sorted by (label length, IRI).
    """
    folded = keyword.casefold()
    if not folded:
        return []
    hits: dict[str, str] = {}
    exact = index.concepts_for(folded)
    if exact:
        for concept in exact:
            hits[concept] = folded
    elif len(folded) >= 3:
        for label in index.labels():
            if label.startswith(folded):
                for concept in index.concepts_for(label):
                    best = hits.get(concept)
                    if best is None or (len(label), label) < (len(best), best):
                        hits[concept] = label
    matches = [
        ConceptMatch(
            concept=concept,
            label=index.display_label(folded_label),
            surface=keyword,
            count=1,
            spans=((0, len(keyword)),),
        )
        for concept, folded_label in hits.items()
    ]
    matches.sort(key=lambda m: (len(m.label), m.concept))
    return matches


def analyze_document(index: LabelIndex, text: str) -> list[ConceptMatch]:
    """Recognize vocabulary concepts in free text.

    Tokens are case-folded, stopwords dropped, and label n-grams matched
    greedily (longest first, left to right); each token joins at most one
    match.  Results are sorted by (count descending, IRI).
    """
    kept = [t for t in tokenize(text) if t.word not in _STOPWORDS]
    counts: dict[str, int] = {}
    spans: dict[str, list[tuple[int, int]]] = {}
    labels: dict[str, str] = {}
    i = 0
    while i < len(kept):
        step = 1
        for n in range(_MAX_NGRAM, 0, -1):
            if i + n > len(kept):
                continue
            window = tuple(t.word for t in kept[i : i + n])
            entries = index.ngram_concepts(window)
            if not entries:
                continue
            span = (kept[i].start, kept[i + n - 1].end)
            for concept, folded in entries:
                counts[concept] = counts.get(concept, 0) + 1
                spans.setdefault(concept, []).append(span)
                labels.setdefault(concept, folded)
            step = n
            break
        i += step
    matches = [
        ConceptMatch(
            concept=concept,
            label=index.display_label(labels[concept]),
            surface=text[spans[concept][0][0] : spans[concept][0][1]],
            count=count,
            spans=tuple(spans[concept]),
        )
        for concept, count in counts.items()
    ]
    matches.sort(key=lambda m: (-m.count, m.concept))
    return matches


@dataclass(frozen=True, slots=True)
class SearchResult:
    """One ranked resource; the score is the sum of its contributions."""

    resource: str
    title: Optional[str] = None
    contributions: tuple[tuple[str, float], ...] = ()
    matched: tuple[tuple[str, Tier], ...] = ()

    @property
    def score(self) -> float:
        return sum(weight for _, weight in self.contributions)


@dataclass(frozen=True, slots=True)
class ProviderStatus:
    provider: str
    outcome: str  # 'ok', 'timeout' or 'error'
    elapsed_ms: float
    error: Optional[str] = None


class SearchProvider(Protocol):
    id: str

    def search(self, concepts: Mapping[str, Tier]) -> list[SearchResult]: ...


def rank_results(partials: Iterable[SearchResult]) -> list[SearchResult]:
    """Merge by resource IRI: contributions add up, titles pick the least.

    Idempotent and insensitive to input order; ties in score break by
    resource IRI ascending.
    """
    grouped: dict[str, list[SearchResult]] = {}
    for partial in partials:
        grouped.setdefault(partial.resource, []).append(partial)
    merged = []
    for resource, group in grouped.items():
        per_provider: dict[str, float] = {}
        matched: set[tuple[str, Tier]] = set()
        titles = []
        for partial in group:
            for provider, weight in partial.contributions:
                per_provider[provider] = per_provider.get(provider, 0.0) + weight
            matched.update(partial.matched)
            if partial.title is not None:
                titles.append(partial.title)
        merged.append(
            SearchResult(
                resource=resource,
                title=min(titles) if titles else None,
                contributions=tuple(sorted(per_provider.items())),
                matched=tuple(sorted(matched)),
            )
        )
    merged.sort(key=lambda r: (-r.score, r.resource))
    return merged


def _timed_call(
    provider: SearchProvider, concepts: Mapping[str, Tier]
) -> tuple[float, list[SearchResult], Optional[str]]:
    begun = time.monotonic()
    try:
        results = provider.search(concepts)
    except Exception as exc:
        return (time.monotonic() - begun) * 1000.0, [], str(exc)
    return (time.monotonic() - begun) * 1000.0, results, None


def federated_search(
    providers: Sequence[SearchProvider],
    concepts: Mapping[str, Tier],
    deadline_ms: float = DEFAULT_DEADLINE_MS,
) -> tuple[list[SearchResult], list[ProviderStatus]]:
    """Query every provider concurrently and merge what beat the deadline.

    Provider work keeps running in its thread after the deadline, but its
    results are discarded; the status list always covers every provider.
    """
    if deadline_ms <= 0:
        raise ValueError("deadline_ms must be positive")
    providers = list(providers)
    if not providers:
        return [], []
    pool = ThreadPoolExecutor(max_workers=len(providers))
    try:
        futures = {
            pool.submit(_timed_call, provider, concepts): provider
            for provider in providers
        }
        done, _pending = wait(futures, timeout=deadline_ms / 1000.0)
    finally:
        pool.shutdown(wait=False)
    partials: list[SearchResult] = []
    statuses: list[ProviderStatus] = []
    for future, provider in futures.items():
        if future not in done:
            statuses.append(
                ProviderStatus(provider.id, "timeout", deadline_ms, "deadline exceeded")
            )
            continue
        elapsed, results, error = future.result()
        if error is not None:
            statuses.append(ProviderStatus(provider.id, "error", elapsed, error))
        else:
            statuses.append(ProviderStatus(provider.id, "ok", elapsed))
            partials.extend(results)
    return rank_results(partials), statuses


def local_search(
    store: QuadStore,
    concepts: Mapping[str, Tier],
    provider_id: str = "local",
) -> list[SearchResult]:
    """Score each video graph against the expanded concept set.

    Every annotation contributes at most once, at the weight of its
    highest-tier matching body; zero-score videos are omitted.
    """
    results = []
    videos = sorted(
        {q.g.value for q in store.match(None, iri(RDF_TYPE), iri(VA_ANNOTATION), None)}
    )
    for video in videos:
        score = 0.0
        matched: set[tuple[str, Tier]] = set()
        for annotation in from_quads(store, video):
            best: Optional[Tier] = None
            for body in annotation.bodies:
                tier = concepts.get(body)
                if tier is None:
                    continue
                matched.add((body, tier))
                if best is None or TIER_WEIGHT[tier] > TIER_WEIGHT[best]:
                    best = tier
            if best is not None:
                score += TIER_WEIGHT[best]
        if score > 0.0:
            title_quads = store.match(iri(video), iri(RDFS_LABEL), None, None)
            titles = [q.o.value for q in title_quads if q.o.kind == "literal"]
            results.append(
                SearchResult(
                    resource=video,
                    title=min(titles) if titles else None,
                    contributions=((provider_id, score),),
                    matched=tuple(sorted(matched)),
                )
            )
    return results


def find_coannotation_duplicates(
    store: QuadStore, video: str
) -> list[tuple[Annotation, Annotation]]:
    """Pairs of annotations on one video that overlap in time and share a
    body up to owl:sameAs identity; ordered by (first id, second id)."""
    annotations = from_quads(store, video)
    partition = sameas_partition(store)
    canonical = {
        a.id: frozenset(partition.rep(body) for body in a.bodies)
        for a in annotations
    }
    byid = sorted(annotations, key=lambda a: a.id)
    pairs = []
    for i, first in enumerate(byid):
        for second in byid[i + 1 :]:
            if first.overlaps(second) and canonical[first.id] & canonical[second.id]:
                pairs.append((first, second))
    return pairs


def typed_concepts(store: QuadStore, reasoner: Reasoner, classes: Iterable[str]) -> set[str]:
    """Subjects whose rdf:type falls under any given class, via closure."""
    wanted: set[str] = set()
    for cls in classes:
        wanted.update(reasoner.closure.subclasses(cls))
    found = set()
    for quad in store.match(None, iri(RDF_TYPE), None, None):
        if quad.s.kind == "iri" and quad.o.kind == "iri":
            if reasoner.partition.rep(quad.o.value) in wanted:
                found.add(quad.s.value)
    return found


def lookup_typed(
    index: LabelIndex,
    store: QuadStore,
    reasoner: Reasoner,
    keyword: str,
    classes: Iterable[str],
) -> list[ConceptMatch]:
    """lookup_concept restricted to concepts of the given classes."""
    allowed = typed_concepts(store, reasoner, classes)
    return [m for m in lookup_concept(index, keyword) if m.concept in allowed]


def places_in_bbox(
    store: QuadStore,
    reasoner: Reasoner,
    min_lat: Decimal,
    min_lon: Decimal,
    max_lat: Decimal,
    max_lon: Decimal,
) -> list[str]:
    """Place concepts whose WGS84 point lies inside the closed box."""
    places = typed_concepts(store, reasoner, PLACE_CLASSES)
    found = []
    for place in sorted(places):
        lat = _coordinate(store, place, WGS84_LAT)
        lon = _coordinate(store, place, WGS84_LONG)
        if lat is None or lon is None:
            continue
        if min_lat <= lat <= max_lat and min_lon <= lon <= max_lon:
            found.append(place)
    return found


def _coordinate(store: QuadStore, subject: str, predicate: str) -> Optional[Decimal]:
    values = []
    for quad in store.match(iri(subject), iri(predicate), None, None):
        if quad.o.kind != "literal":
            continue
        try:
            value = Decimal(quad.o.value)
        except InvalidOperation:
            continue
        if value.is_finite():
            values.append(value)
    return min(values) if values else None
