"""HTTP service tying the store, journal, inference and search together.

The request core is `AnnotationService.handle`, a plain function from
(method, target, body) to (status, JSON payload); the socket layer is a
thin stdlib wrapper around it, so the whole API is testable in process.
Mutations are journaled before they touch memory and groups are applied
atomically.  Every response carries the store's mutation counter in the
X-Mutation-Count header.
"""

from __future__ import annotations

import json
import logging
import threading
import urllib.parse
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Optional

from .annotations import (
    VA_ANNOTATION,
    Annotation,
    AnnotationError,
    Instant,
    Interval,
    annotation_quads,
    create_annotation,
    format_seconds,
    format_timestamp,
    from_quads,
    parse_timestamp,
    to_quads,
)
from .inference import Reasoner, Tier
from .journal import Journal, replay_journal
from .providers import LocalProvider, load_registry
from .query import evaluate, parse_query
from .rdf import RDF_TYPE, XSD_STRING, QuadStore, Term
from .rdfio import ParseError, read_rdf_file
from .search import (
    DEFAULT_DEADLINE_MS,
    FOAF_PERSON,
    PLACE_CLASSES,
    ConceptMatch,
    LabelIndex,
    ProviderStatus,
    SearchResult,
    analyze_document,
    federated_search,
    find_coannotation_duplicates,
    lookup_concept,
    lookup_typed,
    places_in_bbox,
)

log = logging.getLogger(__name__)


class ApiError(Exception):
    """Maps straight to an HTTP error response."""

    def __init__(self, status: int, message: str, **extra: Any):
        self.status = status
        self.payload = {"error": message, **extra}
        super().__init__(message)


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8311
    journal_path: Optional[Path] = None
    vocab_paths: tuple[Path, ...] = ()
    providers_path: Optional[Path] = None
    deadline_ms: float = DEFAULT_DEADLINE_MS


def annotation_json(annotation: Annotation) -> dict[str, Any]:
    """Wire form; times are exact decimal strings."""
    temporal = annotation.temporal
    if isinstance(temporal, Instant):
        time_obj: dict[str, str] = {"instant": format_seconds(temporal.at)}
    else:
        time_obj = {
            "begin": format_seconds(temporal.begin),
            "end": format_seconds(temporal.end_at),
        }
    return {
        "id": annotation.id,
        "video": annotation.video,
        "time": time_obj,
        "bodies": sorted(annotation.bodies),
        "mode": annotation.mode.value,
        "annotator": annotation.annotator,
        "created": format_timestamp(annotation.created),
    }


def term_json(term: Term) -> dict[str, str]:
    out = {"type": term.kind, "value": term.value}
    if term.kind == "literal":
        if term.lang is not None:
            out["lang"] = term.lang
        elif term.datatype != XSD_STRING:
            out["datatype"] = term.datatype
    return out


def _result_json(result: SearchResult) -> dict[str, Any]:
    return {
        "resource": result.resource,
        "title": result.title,
        "score": result.score,
        "contributions": [
            {"provider": provider, "score": score}
            for provider, score in result.contributions
        ],
        "matched": [
            {"concept": concept, "tier": tier.value}
            for concept, tier in result.matched
        ],
    }


def _status_json(status: ProviderStatus) -> dict[str, Any]:
    out: dict[str, Any] = {
        "provider": status.provider,
        "outcome": status.outcome,
        "elapsed_ms": status.elapsed_ms,
    }
    if status.error is not None:
        out["error"] = status.error
    return out


def _match_json(match: ConceptMatch) -> dict[str, Any]:
    return {
        "concept": match.concept,
        "label": match.label,
        "surface": match.surface,
        "count": match.count,
        "spans": [list(span) for span in match.spans],
    }


class AnnotationService:
    """Application state and the request dispatcher."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        if config.journal_path is not None:
            self.store = replay_journal(config.journal_path)
            self.journal: Optional[Journal] = Journal(config.journal_path)
        else:
            self.store = QuadStore()
            self.journal = None
        # Vocabulary files are reference data: loaded each start, never journaled.
        for vocab in config.vocab_paths:
            self.store.insert_all(read_rdf_file(vocab))
        self.reasoner = Reasoner(self.store)
        if config.providers_path is not None:
            self.providers = load_registry(config.providers_path, self.store)
        else:
            self.providers = [LocalProvider(self.store)]
        self._lock = threading.RLock()
        self._index: Optional[LabelIndex] = None
        self._index_version = -1

    def close(self) -> None:
        if self.journal is not None:
            self.journal.close()

    def label_index(self) -> LabelIndex:
        with self._lock:
            version = self.store.version
            if self._index is None or self._index_version != version:
                self._index = LabelIndex(self.store)
                self._index_version = version
            return self._index

    # ------------------------------------------------------------------
    # dispatch

    def handle(
        self, method: str, target: str, body: bytes = b""
    ) -> tuple[int, Optional[Any]]:
        try:
            return self._route(method, target, body)
        except ApiError as exc:
            return exc.status, exc.payload
        except Exception as exc:  # pragma: no cover - defensive
            log.exception("unhandled error for %s %s", method, target)
            return 500, {"error": f"internal error: {exc}"}

    def _route(
        self, method: str, target: str, body: bytes
    ) -> tuple[int, Optional[Any]]:
        path, _, query_string = target.partition("?")
        params = urllib.parse.parse_qs(query_string, keep_blank_values=True)
        segments = [urllib.parse.unquote(s) for s in path.split("/") if s]

        if segments == ["annotations"]:
            self._require(method, "POST")
            return self._create_annotation(body)
        if len(segments) == 2 and segments[0] == "annotations":
            self._require(method, "DELETE")
            return self._delete_annotation(segments[1])
        if len(segments) == 3 and segments[0] == "videos":
            video, tail = segments[1], segments[2]
            self._require(method, "GET")
            if tail == "annotations":
                return self._list_annotations(video, params)
            if tail == "duplicates":
                return self._list_duplicates(video)
        if segments == ["query"]:
            self._require(method, "POST")
            return self._query(body)
        if segments == ["suggest"]:
            self._require(method, "GET")
            return self._suggest(params)
        if len(segments) == 2 and segments[0] == "search":
            kind = segments[1]
            if kind == "document":
                self._require(method, "POST")
                return self._search_document(body, params)
            if kind in ("concept", "person", "place", "map"):
                self._require(method, "GET")
                return self._search(kind, params)
        if segments == ["healthz"]:
            self._require(method, "GET")
            return 200, {
                "status": "ok",
                "quads": len(self.store),
                "mutations": self.store.version,
            }
        raise ApiError(404, "not found")

    def _require(self, method: str, expected: str) -> None:
        if method != expected:
            raise ApiError(405, f"method not allowed; use {expected}")

    # ------------------------------------------------------------------
    # annotations

    def _create_annotation(self, body: bytes) -> tuple[int, Any]:
        doc = _json_body(body)
        for name in ("video", "time", "bodies", "mode", "annotator"):
            if name not in doc:
                raise ApiError(400, f"missing field: {name}")
        time_obj = doc["time"]
        if not isinstance(time_obj, dict):
            raise ApiError(400, "time must be an object")
        try:
            if "instant" in time_obj:
                if set(time_obj) != {"instant"}:
                    raise ApiError(400, "time takes instant or begin/end")
                temporal: Any = Instant(_seconds(time_obj["instant"]))
            elif {"begin", "end"} <= set(time_obj):
                if set(time_obj) != {"begin", "end"}:
                    raise ApiError(400, "time takes instant or begin/end")
                temporal = Interval(
                    _seconds(time_obj["begin"]), _seconds(time_obj["end"])
                )
            else:
                raise ApiError(400, "time takes instant or begin/end")
            if not isinstance(doc["bodies"], list):
                raise ApiError(400, "bodies must be a list")
            created = None
            if "created" in doc and doc["created"] is not None:
                created = parse_timestamp(str(doc["created"]))
            annotation = create_annotation(
                video=str(doc["video"]),
                temporal=temporal,
                bodies=[str(b) for b in doc["bodies"]],
                mode=doc["mode"],
                annotator=str(doc["annotator"]),
                created=created,
                annotation_id=(
                    str(doc["id"]) if doc.get("id") is not None else None
                ),
            )
        except AnnotationError as exc:
            raise ApiError(400, str(exc)) from None
        with self._lock:
            if annotation_quads(self.store, annotation.id):
                raise ApiError(409, f"annotation id already exists: {annotation.id}")
            quads = to_quads(annotation)
            self._journal_group("+", quads)
            self.store.insert_all(quads)
        return 201, annotation_json(annotation)

    def _delete_annotation(self, annotation_id: str) -> tuple[int, Any]:
        with self._lock:
            quads = annotation_quads(self.store, annotation_id)
            is_annotation = any(
                q.p.value == RDF_TYPE and q.o.value == VA_ANNOTATION for q in quads
            )
            if not quads or not is_annotation:
                raise ApiError(404, f"no such annotation: {annotation_id}")
            self._journal_group("-", quads)
            self.store.remove_all(quads)
        return 204, None

    def _journal_group(self, op: str, quads) -> None:
        if self.journal is None:
            return
        try:
            self.journal.append((op, quad) for quad in quads)
        except OSError as exc:
            raise ApiError(500, f"journal write failed: {exc}") from None

    def _list_annotations(self, video: str, params) -> tuple[int, Any]:
        lo = _decimal_param(params, "from")
        hi = _decimal_param(params, "to")
        if lo is not None and hi is not None and lo > hi:
            raise ApiError(400, "'from' exceeds 'to'")
        try:
            with self._lock:
                annotations = from_quads(self.store, video)
        except AnnotationError as exc:
            raise ApiError(500, str(exc)) from None
        if lo is not None:
            annotations = [a for a in annotations if a.end >= lo]
        if hi is not None:
            annotations = [a for a in annotations if a.start <= hi]
        return 200, [annotation_json(a) for a in annotations]

    def _list_duplicates(self, video: str) -> tuple[int, Any]:
        try:
            with self._lock:
                pairs = find_coannotation_duplicates(self.store, video)
        except AnnotationError as exc:
            raise ApiError(500, str(exc)) from None
        return 200, [
            {"first": annotation_json(a), "second": annotation_json(b)}
            for a, b in pairs
        ]

    # ------------------------------------------------------------------
    # query and search

    def _query(self, body: bytes) -> tuple[int, Any]:
        doc = _json_body(body)
        if "query" not in doc or not isinstance(doc["query"], str):
            raise ApiError(400, "missing field: query")
        try:
            parsed = parse_query(doc["query"])
        except ParseError as exc:
            raise ApiError(
                400, str(exc), line=exc.line, column=exc.column
            ) from None
        with self._lock:
            rows = evaluate(self.store, parsed)
        projected = list(parsed.projected())
        return 200, {
            "vars": projected,
            "rows": [
                {name: term_json(row[name]) for name in projected} for row in rows
            ],
        }

    def _suggest(self, params) -> tuple[int, Any]:
        keyword = _text_param(params, "q")
        with self._lock:
            index = self.label_index()
            matches = lookup_concept(index, keyword)
            suggestions = []
            seen = set()
            for match in matches:
                if match.concept in seen:
                    continue
                seen.add(match.concept)
                suggestions.append(
                    {"uri": match.concept, "label": match.label, "source": "match"}
                )
            for match in matches:
                for neighbour in self.reasoner.related(match.concept):
                    if neighbour in seen:
                        continue
                    seen.add(neighbour)
                    suggestions.append(
                        {
                            "uri": neighbour,
                            "label": index.label_of(neighbour),
                            "source": "related",
                        }
                    )
        return 200, {"suggestions": suggestions}

    def _expansion_for(self, concepts: list[str]) -> dict[str, Tier]:
        expansion: dict[str, Tier] = {}
        for concept in concepts:
            for uri, tier in self.reasoner.expand(concept).items():
                current = expansion.get(uri)
                if current is None or (
                    current is Tier.SUBCLASS and tier is Tier.DIRECT
                ):
                    expansion[uri] = tier
        return dict(sorted(expansion.items()))

    def _search_seeds(self, kind: str, params) -> list[str]:
        index = self.label_index()
        if kind == "concept":
            if "uri" in params:
                return [_text_param(params, "uri")]
            keyword = _text_param(params, "q")
            return [m.concept for m in lookup_concept(index, keyword)]
        if kind == "person":
            name = _text_param(params, "name")
            matches = lookup_typed(
                index, self.store, self.reasoner, name, [FOAF_PERSON]
            )
            return [m.concept for m in matches]
        if kind == "place":
            name = _text_param(params, "name")
            matches = lookup_typed(
                index, self.store, self.reasoner, name, PLACE_CLASSES
            )
            return [m.concept for m in matches]
        # map
        bounds = {}
        for key in ("min_lat", "min_lon", "max_lat", "max_lon"):
            raw = _text_param(params, key)
            try:
                bounds[key] = Decimal(raw)
            except InvalidOperation:
                raise ApiError(400, f"bad decimal for {key}: {raw!r}") from None
        if (
            bounds["min_lat"] > bounds["max_lat"]
            or bounds["min_lon"] > bounds["max_lon"]
        ):
            raise ApiError(400, "empty bounding box")
        return places_in_bbox(
            self.store,
            self.reasoner,
            bounds["min_lat"],
            bounds["min_lon"],
            bounds["max_lat"],
            bounds["max_lon"],
        )

    def _search(self, kind: str, params) -> tuple[int, Any]:
        deadline = _deadline_param(params, self.config.deadline_ms)
        with self._lock:
            seeds = self._search_seeds(kind, params)
            expansion = self._expansion_for(seeds)
        results, statuses = federated_search(self.providers, expansion, deadline)
        return 200, {
            "concepts": [
                {"uri": uri, "tier": tier.value} for uri, tier in expansion.items()
            ],
            "results": [_result_json(r) for r in results],
            "providers": [_status_json(s) for s in statuses],
        }

    def _search_document(self, body: bytes, params) -> tuple[int, Any]:
        deadline = _deadline_param(params, self.config.deadline_ms)
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError:
            raise ApiError(400, "document must be UTF-8 text") from None
        with self._lock:
            matches = analyze_document(self.label_index(), text)
            expansion = self._expansion_for([m.concept for m in matches])
        results, statuses = federated_search(self.providers, expansion, deadline)
        return 200, {
            "matches": [_match_json(m) for m in matches],
            "concepts": [
                {"uri": uri, "tier": tier.value} for uri, tier in expansion.items()
            ],
            "results": [_result_json(r) for r in results],
            "providers": [_status_json(s) for s in statuses],
        }


def _json_body(body: bytes) -> dict[str, Any]:
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ApiError(400, f"invalid JSON body: {exc}") from None
    if not isinstance(doc, dict):
        raise ApiError(400, "request body must be a JSON object")
    return doc


def _seconds(value: Any) -> Decimal:
    if isinstance(value, bool) or value is None:
        raise ApiError(400, f"bad time value: {value!r}")
    try:
        return Decimal(str(value))
    except InvalidOperation:
        raise ApiError(400, f"bad time value: {value!r}") from None


def _text_param(params, name: str) -> str:
    values = params.get(name)
    if not values:
        raise ApiError(400, f"missing parameter: {name}")
    return values[0]


def _decimal_param(params, name: str) -> Optional[Decimal]:
    values = params.get(name)
    if not values:
        return None
    try:
        return Decimal(values[0])
    except InvalidOperation:
        raise ApiError(400, f"bad decimal for {name}: {values[0]!r}") from None


def _deadline_param(params, default_ms: float) -> float:
    values = params.get("deadline_ms")
    if not values:
        return default_ms
    try:
        deadline = float(values[0])
    except ValueError:
        raise ApiError(400, f"bad deadline_ms: {values[0]!r}") from None
    if deadline <= 0:
        raise ApiError(400, "deadline_ms must be positive")
    return deadline


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def _dispatch(self) -> None:
        service: AnnotationService = self.server.service  # type: ignore[attr-defined]
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        status, payload = service.handle(self.command, self.path, body)
        data = b""
        if payload is not None:
            data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("X-Mutation-Count", str(service.store.version))
        self.end_headers()
        if data:
            self.wfile.write(data)

    do_GET = _dispatch
    do_POST = _dispatch
    do_DELETE = _dispatch

    def log_message(self, format: str, *args) -> None:
        log.debug("%s %s", self.address_string(), format % args)


class ServiceServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, service: AnnotationService, host: str, port: int):
        self.service = service
        super().__init__((host, port), _Handler)


def make_server(config: ServiceConfig) -> ServiceServer:
    """Bind the listener; OSError propagates when the address is taken."""
    service = AnnotationService(config)
    try:
        return ServiceServer(service, config.host, config.port)
    except OSError:
        service.close()
        raise
