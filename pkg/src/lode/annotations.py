"""Video annotation model and its quad mapping.

An annotation links a stretch of video time to one or more concept URIs.
All quads of an annotation live in the named graph of its video, so a
video's annotations can be addressed, listed and dropped as one graph.
An instant annotation with one body is exactly 7 quads; an interval
annotation with two bodies is exactly 9.
"""

from __future__ import annotations

import enum
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from typing import Iterable, Optional, Union

from .rdf import (
    RDF_TYPE,
    XSD_DATETIME,
    XSD_DECIMAL,
    Quad,
    QuadStore,
    Term,
    TermError,
    iri,
    literal,
)

VA_NS = "http://example.org/lode/va#"

VA_ANNOTATION = VA_NS + "Annotation"
VA_ANNOTATES = VA_NS + "annotates"
VA_AT_TIME = VA_NS + "atTime"
VA_BEGIN_TIME = VA_NS + "beginTime"
VA_END_TIME = VA_NS + "endTime"
VA_HAS_BODY = VA_NS + "hasBody"
VA_MODE = VA_NS + "mode"
VA_ANNOTATOR = VA_NS + "annotator"
VA_CREATED = VA_NS + "created"


class AnnotationError(ValueError):
    """An annotation violates its structural rules."""


class Mode(str, enum.Enum):
    """What the annotated content appeals to: sight, hearing or neither."""

    VISUAL = "visual"
    AUDIBLE = "audible"
    CONCEPTUAL = "conceptual"


MODE_IRI = {
    Mode.VISUAL: VA_NS + "Visual",
    Mode.AUDIBLE: VA_NS + "Audible",
    Mode.CONCEPTUAL: VA_NS + "Conceptual",
}
IRI_MODE = {v: k for k, v in MODE_IRI.items()}

Seconds = Union[Decimal, int, float, str]


def _to_seconds(value: Seconds, what: str) -> Decimal:
    try:
        result = Decimal(str(value))
    except InvalidOperation:
        raise AnnotationError(f"{what} is not a decimal: {value!r}") from None
    if not result.is_finite():
        raise AnnotationError(f"{what} is not a finite decimal: {value!r}")
    return result


@dataclass(frozen=True, slots=True)
class Instant:
    """A single point on the video timeline, in seconds."""

    at: Decimal

    def __post_init__(self) -> None:
        object.__setattr__(self, "at", _to_seconds(self.at, "time"))
        if self.at < 0:
            raise AnnotationError("time must not be negative")

    @property
    def start(self) -> Decimal:
        return self.at

    @property
    def end(self) -> Decimal:
        return self.at


@dataclass(frozen=True, slots=True)
class Interval:
    """A closed stretch [begin, end] on the video timeline, in seconds."""

    begin: Decimal
    end_at: Decimal

    def __post_init__(self) -> None:
        object.__setattr__(self, "begin", _to_seconds(self.begin, "begin time"))
        object.__setattr__(self, "end_at", _to_seconds(self.end_at, "end time"))
        if self.begin < 0:
            raise AnnotationError("begin time must not be negative")
        if self.begin >= self.end_at:
            raise AnnotationError("begin time must be before end time")

    @property
    def start(self) -> Decimal:
        return self.begin

    @property
    def end(self) -> Decimal:
        return self.end_at


Temporal = Union[Instant, Interval]


@dataclass(frozen=True, slots=True)
class Annotation:
    id: str
    video: str
    temporal: Temporal
    bodies: frozenset[str]
    mode: Mode
    annotator: str
    created: datetime

    @property
    def start(self) -> Decimal:
        return self.temporal.start

    @property
    def end(self) -> Decimal:
        return self.temporal.end

    def overlaps(self, other: "Annotation") -> bool:
        # Closed intervals: touching endpoints count as overlap.
        return self.start <= other.end and other.start <= self.end


def format_seconds(value: Decimal) -> str:
    """Shortest exact decimal form: no exponent, no trailing zeros."""
    text = format(value, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text or "0"


def format_timestamp(value: datetime) -> str:
    return value.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    try:
        return datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(
            tzinfo=timezone.utc
        )
    except ValueError:
        raise AnnotationError(f"bad timestamp: {text!r}") from None


def _require_iri(value: str, what: str) -> str:
    try:
        iri(value)
    except TermError as exc:
        raise AnnotationError(f"{what}: {exc}") from None
    return value


def create_annotation(
    video: str,
    temporal: Temporal,
    bodies: Iterable[str],
    mode: Mode,
    annotator: str,
    created: Optional[datetime] = None,
    annotation_id: Optional[str] = None,
) -> Annotation:
    """Validate the pieces and mint a urn:uuid identity.

    Callers may pass an explicit annotation_id and created time, which
    keeps replays and test runs reproducible; by default a fresh UUID and
    the current UTC second are used.
    """
    _require_iri(video, "video")
    if not isinstance(temporal, (Instant, Interval)):
        raise AnnotationError("temporal must be an Instant or Interval")
    body_set = frozenset(bodies)
    if not body_set:
        raise AnnotationError("annotation needs at least one body")
    for body in body_set:
        _require_iri(body, "body")
    if not isinstance(mode, Mode):
        try:
            mode = Mode(mode)
        except ValueError:
            raise AnnotationError(f"invalid mode: {mode!r}") from None
    if not annotator:
        raise AnnotationError("annotator must not be empty")
    if annotation_id is None:
        annotation_id = f"urn:uuid:{uuid.uuid4()}"
    else:
        _require_iri(annotation_id, "annotation id")
        if not annotation_id.startswith("urn:uuid:"):
            raise AnnotationError("annotation id must be a urn:uuid IRI")
    if created is None:
        created = datetime.now(timezone.utc)
    created = created.astimezone(timezone.utc).replace(microsecond=0)
    return Annotation(
        id=annotation_id,
        video=video,
        temporal=temporal,
        bodies=body_set,
        mode=mode,
        annotator=annotator,
        created=created,
    )


def _annotator_term(annotator: str) -> Term:
    try:
        return iri(annotator)
    except TermError:
        return literal(annotator)


def to_quads(annotation: Annotation) -> list[Quad]:
    """Serialize into the video's named graph, in a fixed quad order."""
    subject = iri(annotation.id)
    graph = iri(annotation.video)

    def q(predicate: str, obj: Term) -> Quad:
        return Quad(subject, iri(predicate), obj, graph)

    quads = [
        q(RDF_TYPE, iri(VA_ANNOTATION)),
        q(VA_ANNOTATES, iri(annotation.video)),
    ]
    if isinstance(annotation.temporal, Instant):
        quads.append(
            q(VA_AT_TIME, literal(format_seconds(annotation.temporal.at), XSD_DECIMAL))
        )
    else:
        quads.append(
            q(
                VA_BEGIN_TIME,
                literal(format_seconds(annotation.temporal.begin), XSD_DECIMAL),
            )
        )
        quads.append(
            q(
                VA_END_TIME,
                literal(format_seconds(annotation.temporal.end_at), XSD_DECIMAL),
            )
        )
    for body in sorted(annotation.bodies):
        quads.append(q(VA_HAS_BODY, iri(body)))
    quads.append(q(VA_MODE, iri(MODE_IRI[annotation.mode])))
    quads.append(q(VA_ANNOTATOR, _annotator_term(annotation.annotator)))
    quads.append(
        q(VA_CREATED, literal(format_timestamp(annotation.created), XSD_DATETIME))
    )
    return quads


def _single(values: list[Term], ann_id: str, what: str) -> Term:
    if not values:
        raise AnnotationError(f"{ann_id}: missing {what}")
    if len(values) > 1:
        raise AnnotationError(f"{ann_id}: conflicting {what}")
    return values[0]


def _decimal_value(term: Term, ann_id: str, what: str) -> Decimal:
    if term.kind != "literal":
        raise AnnotationError(f"{ann_id}: {what} must be a literal")
    try:
        value = Decimal(term.value)
    except InvalidOperation:
        raise AnnotationError(f"{ann_id}: bad {what}: {term.value!r}") from None
    if not value.is_finite():
        raise AnnotationError(f"{ann_id}: bad {what}: {term.value!r}")
    return value


def from_quads(store: QuadStore, video: str) -> list[Annotation]:
    """Reconstruct every annotation in the video's graph.

    Incomplete or ambiguous subjects raise, naming the offending id.
    The result is sorted by (start time, id).
    """
    graph = iri(_require_iri(video, "video"))
    type_quads = store.match(None, iri(RDF_TYPE), iri(VA_ANNOTATION), graph)
    annotations = []
    for subject in sorted({q.s for q in type_quads}, key=lambda t: t.value):
        if subject.kind != "iri":
            raise AnnotationError(f"{subject.value}: annotation id must be an IRI")
        ann_id = subject.value
        props: dict[str, list[Term]] = {}
        for quad in store.match(subject, None, None, graph):
            props.setdefault(quad.p.value, []).append(quad.o)

        at = props.get(VA_AT_TIME, [])
        begin = props.get(VA_BEGIN_TIME, [])
        end = props.get(VA_END_TIME, [])
        temporal: Temporal
        if at and (begin or end):
            raise AnnotationError(f"{ann_id}: conflicting temporal properties")
        try:
            if at:
                term = _single(at, ann_id, "time")
                temporal = Instant(_decimal_value(term, ann_id, "time"))
            elif begin or end:
                b = _single(begin, ann_id, "begin time")
                e = _single(end, ann_id, "end time")
                temporal = Interval(
                    _decimal_value(b, ann_id, "begin time"),
                    _decimal_value(e, ann_id, "end time"),
                )
            else:
                raise AnnotationError(f"{ann_id}: missing temporal properties")
        except AnnotationError as exc:
            if str(exc).startswith(ann_id):
                raise
            raise AnnotationError(f"{ann_id}: {exc}") from None

        bodies = props.get(VA_HAS_BODY, [])
        if not bodies:
            raise AnnotationError(f"{ann_id}: missing body")
        for body in bodies:
            if body.kind != "iri":
                raise AnnotationError(f"{ann_id}: body must be an IRI")

        mode_term = _single(props.get(VA_MODE, []), ann_id, "mode")
        if mode_term.kind != "iri" or mode_term.value not in IRI_MODE:
            raise AnnotationError(f"{ann_id}: invalid mode: {mode_term.value!r}")

        annotator_term = _single(props.get(VA_ANNOTATOR, []), ann_id, "annotator")
        created_term = _single(props.get(VA_CREATED, []), ann_id, "created")
        if created_term.kind != "literal":
            raise AnnotationError(f"{ann_id}: created must be a literal")
        try:
            created = parse_timestamp(created_term.value)
        except AnnotationError as exc:
            raise AnnotationError(f"{ann_id}: {exc}") from None

        annotations.append(
            Annotation(
                id=ann_id,
                video=video,
                temporal=temporal,
                bodies=frozenset(b.value for b in bodies),
                mode=IRI_MODE[mode_term.value],
                annotator=annotator_term.value,
                created=created,
            )
        )
    annotations.sort(key=lambda a: (a.start, a.id))
    return annotations


def annotation_quads(store: QuadStore, annotation_id: str) -> list[Quad]:
    """Every stored quad whose subject is the given annotation id."""
    try:
        subject = iri(annotation_id)
    except TermError:
        return []
    return store.match(subject, None, None, None)


def annotations_in_range(
    store: QuadStore, video: str, start: Seconds, end: Seconds
) -> list[Annotation]:
    """Annotations whose closed time span intersects [start, end]."""
    lo = _to_seconds(start, "range start")
    hi = _to_seconds(end, "range end")
    if lo > hi:
        raise ValueError("range start exceeds range end")
    return [a for a in from_quads(store, video) if a.start <= hi and a.end >= lo]
