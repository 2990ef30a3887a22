"""Search providers: the local store, remote peers, and scripted fixtures.

A provider takes the tiered concept expansion and returns partial
results; federation merges them.  Remote peers speak this platform's own
query wire format, so two instances can search each other.  Fixture
providers replay a scripted latency and response, which makes deadline
behaviour testable without real networks.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

import httpx

from .annotations import VA_ANNOTATES, VA_HAS_BODY
from .inference import Tier
from .rdf import QuadStore
from .search import SearchProvider, SearchResult, local_search

REMOTE_BATCH_SIZE = 20
DEFAULT_TIMEOUT_MS = 2000.0


class ProviderError(Exception):
    """Provider failure with a machine-readable kind."""

    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(f"{kind}: {message}")


class FixtureFormatError(ValueError):
    """Bad fixture file; carries the 1-based offending line."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass
class LocalProvider:
    """Scores the service's own store."""

    store: QuadStore
    id: str = "local"

    def search(self, concepts: Mapping[str, Tier]) -> list[SearchResult]:
        return local_search(self.store, concepts, provider_id=self.id)


@dataclass
class RemoteProvider:
    """Queries a peer instance's /query endpoint over HTTP.

    One SELECT is issued per expanded URI; URIs are worked through in
    batches over a single connection.  Each distinct (annotation, video)
    row contributes 1.0 to its video.
    """

    id: str
    endpoint: str
    timeout_ms: float = DEFAULT_TIMEOUT_MS
    batch_size: int = REMOTE_BATCH_SIZE

    def search(self, concepts: Mapping[str, Tier]) -> list[SearchResult]:
        uris = sorted(concepts)
        hits: dict[str, set[tuple[str, str]]] = {}
        matched: dict[str, set[tuple[str, Tier]]] = {}
        timeout = self.timeout_ms / 1000.0
        try:
            with httpx.Client(timeout=timeout) as client:
                for start in range(0, len(uris), self.batch_size):
                    for uri in uris[start : start + self.batch_size]:
                        rows = self._query_one(client, uri)
                        for ann, video in rows:
                            hits.setdefault(video, set()).add((ann, video))
                            matched.setdefault(video, set()).add(
                                (uri, concepts[uri])
                            )
        except httpx.TimeoutException as exc:
            raise ProviderError("timeout", str(exc) or "request timed out") from exc
        except httpx.ConnectError as exc:
            raise ProviderError("connect", str(exc)) from exc
        except httpx.HTTPError as exc:
            raise ProviderError("connect", str(exc)) from exc
        return [
            SearchResult(
                resource=video,
                title=None,
                contributions=((self.id, float(len(rows))),),
                matched=tuple(sorted(matched[video])),
            )
            for video, rows in sorted(hits.items())
        ]

    def _query_one(self, client: httpx.Client, uri: str) -> set[tuple[str, str]]:
        query = (
            "SELECT ?a ?video WHERE { "
            f"?a <{VA_HAS_BODY}> <{uri}> . "
            f"?a <{VA_ANNOTATES}> ?video . }}"
        )
        response = client.post(self.endpoint, json={"query": query})
        if response.status_code != 200:
            raise ProviderError(
                "http-status", f"{self.endpoint} returned {response.status_code}"
            )
        try:
            payload = response.json()
            rows = payload["rows"]
            out = set()
            for row in rows:
                a, video = row["a"], row["video"]
                if a["type"] != "iri" or video["type"] != "iri":
                    continue
                out.add((a["value"], video["value"]))
            return out
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(
                "malformed-response", f"unexpected body from {self.endpoint}"
            ) from exc


@dataclass
class FixtureProvider:
    """Replays a scripted latency followed by results or a failure."""

    id: str
    latency_ms: float
    results: tuple[SearchResult, ...] = ()
    error: Optional[str] = None

    def search(self, concepts: Mapping[str, Tier]) -> list[SearchResult]:
        del concepts  # scripted output does not depend on the request
        if self.latency_ms > 0:
            time.sleep(self.latency_ms / 1000.0)
        if self.error is not None:
            raise ProviderError("scripted", self.error)
        return list(self.results)

    @classmethod
    def from_file(cls, provider_id: str, path: str | Path) -> "FixtureProvider":
        text = Path(path).read_text("utf-8")
        latency_ms: Optional[float] = None
        results: list[SearchResult] = []
        error: Optional[str] = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if fields[0] == "latency":
                if latency_ms is not None:
                    raise FixtureFormatError(lineno, "duplicate latency line")
                if len(fields) != 2:
                    raise FixtureFormatError(lineno, "latency takes one value")
                try:
                    latency_ms = float(fields[1])
                except ValueError:
                    raise FixtureFormatError(
                        lineno, f"bad latency: {fields[1]!r}"
                    ) from None
            elif fields[0] == "error":
                if latency_ms is None:
                    raise FixtureFormatError(lineno, "latency line must come first")
                if error is not None or results:
                    raise FixtureFormatError(lineno, "error excludes other lines")
                message = line.split(None, 1)[1] if len(fields) > 1 else ""
                if not message:
                    raise FixtureFormatError(lineno, "error needs a message")
                error = message
            elif fields[0] == "result":
                if latency_ms is None:
                    raise FixtureFormatError(lineno, "latency line must come first")
                if error is not None:
                    raise FixtureFormatError(lineno, "error excludes other lines")
                if len(fields) < 3:
                    raise FixtureFormatError(lineno, "result takes an IRI and score")
                try:
                    score = float(fields[2])
                except ValueError:
                    raise FixtureFormatError(
                        lineno, f"bad score: {fields[2]!r}"
                    ) from None
                title = " ".join(fields[3:]) if len(fields) > 3 else None
                results.append(
                    SearchResult(
                        resource=fields[1],
                        title=title,
                        contributions=((provider_id, score),),
                    )
                )
            else:
                raise FixtureFormatError(lineno, f"unknown directive: {fields[0]!r}")
        if latency_ms is None:
            raise FixtureFormatError(1, "missing latency line")
        return cls(
            id=provider_id,
            latency_ms=latency_ms,
            results=tuple(results),
            error=error,
        )


def load_registry(path: str | Path, store: QuadStore) -> list[SearchProvider]:
    """Build the provider list from a JSON registry file.

    Entries carry an id unique across the file and a kind of 'local',
    'remote-endpoint' or 'fixture'; fixture paths resolve relative to the
    registry file.
    """
    path = Path(path)
    try:
        entries = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(entries, list):
        raise ValueError(f"{path}: registry must be a JSON list")
    providers: list[SearchProvider] = []
    seen: set[str] = set()
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "id" not in entry or "kind" not in entry:
            raise ValueError(f"{path}: entry {i} needs 'id' and 'kind'")
        provider_id, kind = str(entry["id"]), str(entry["kind"])
        if provider_id in seen:
            raise ValueError(f"{path}: duplicate provider id {provider_id!r}")
        seen.add(provider_id)
        if kind == "local":
            providers.append(LocalProvider(store=store, id=provider_id))
        elif kind == "remote-endpoint":
            if "endpoint" not in entry:
                raise ValueError(f"{path}: entry {provider_id!r} needs 'endpoint'")
            providers.append(
                RemoteProvider(
                    id=provider_id,
                    endpoint=str(entry["endpoint"]),
                    timeout_ms=float(entry.get("timeout_ms", DEFAULT_TIMEOUT_MS)),
                )
            )
        elif kind == "fixture":
            if "path" not in entry:
                raise ValueError(f"{path}: entry {provider_id!r} needs 'path'")
            fixture_path = path.parent / str(entry["path"])
            providers.append(FixtureProvider.from_file(provider_id, fixture_path))
        else:
            raise ValueError(f"{path}: unknown provider kind {kind!r}")
    return providers
